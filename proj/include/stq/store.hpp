#pragma once

#include "stq/config.hpp"
#include "stq/quench.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stq {

inline constexpr int kCsvSchemaVersion = 1;

// File written by a different schema version; needs migration.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric table with a fixed header.
///
/// On disk:
///   # stq-csv v1 <kind>
///   # units: <free text>
///   col1,col2,...
///   rows, every value with 17 significant digits
struct CsvTable {
  std::string kind;
  std::string units;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void addRow(std::vector<double> row);
  std::size_t columnIndex(const std::string& name) const;
};

void writeCsv(const std::string& path, const CsvTable& table);
// Throws SchemaError on a version or kind mismatch.
CsvTable readCsv(const std::string& path, const std::string& expectedKind = {});

// Fixed schemas of the quench observables.
CsvTable energyTable(const ObservableSeries& series);
CsvTable localEnergyTable(const ObservableSeries& series);
CsvTable correlationTable(const ObservableSeries& series);
CsvTable entropyTable(const ObservableSeries& series);
CsvTable truncationTable(const ObservableSeries& series);

/// Writes energy.csv, local_energy.csv, correlations.csv, entropy.csv and
/// truncation.csv; returns the file names.
std::vector<std::string> writeSeries(const std::string& directory, const ObservableSeries& series);
// Inverse of writeSeries; needs the geometry to recover column indices.
ObservableSeries readSeries(const std::string& directory, const LatticeGeometry& geometry);

std::uint32_t fileCrc32(const std::string& path);

/// Exclusive claim on a run directory, held until destruction.
class RunLock {
 public:
  explicit RunLock(const std::string& directory);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// $STQ_OUTPUT_ROOT, else config.outputRoot, else "runs".
std::string outputRoot(const RunConfig& config);
// root / name, or root / "<command>-Lx<..>xLy<..>" when no name is set.
std::string runDirectory(const RunConfig& config, const std::string& command);

struct ManifestFile {
  std::string name;
  std::uintmax_t bytes = 0;
  std::uint32_t crc32 = 0;
};

struct RunManifest {
  std::string command;
  RunConfig config;
  int threads = 1;
  double wallSeconds = 0.0;
  // Named convergence / completion flags.
  std::vector<std::pair<std::string, bool>> flags;
  // Free-form numeric results (energies, velocities, fit parameters).
  std::vector<std::pair<std::string, double>> summary;
  std::vector<ManifestFile> files;

  void addFile(const std::string& directory, const std::string& name);
  // JSON text with sorted keys.
  std::string toJson() const;
};

void writeManifest(const std::string& directory, const RunManifest& manifest);

std::string codeVersion();

}  // namespace stq

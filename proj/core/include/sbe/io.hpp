#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sbe/occupation.hpp"
#include "sbe/path.hpp"
#include "sbe/young.hpp"

namespace sbe {

// 64-bit FNV-1a content hash, used to fingerprint run inputs in manifests.
std::uint64_t fnv1a64(std::span<const std::byte> data);
std::uint64_t fnv1a64_file(const std::filesystem::path& file);
std::string hex64(std::uint64_t value);

// Sampled-path CSV: header "t,x1,...,xd", one row per sample, every value
// printed with 17 significant digits so a read-back is bit exact.
void write_path_csv(const std::filesystem::path& file,
                    const SampledPath& path);
SampledPath read_path_csv(const std::filesystem::path& file);

// Sampled-path binary container: magic "SBEP", version byte 1, u64 sample
// count, u32 dimension, then times and row-major values as little-endian
// doubles.
void write_path_binary(const std::filesystem::path& file,
                       const SampledPath& path);
SampledPath read_path_binary(const std::filesystem::path& file);

// Reads either container, sniffing the magic bytes.
SampledPath read_path_any(const std::filesystem::path& file);

// Occupation-measure CSV: header "w,x1,...,xd" with the span recorded in a
// leading comment line "# span,<s>,<t>".
void write_measure_csv(const std::filesystem::path& file,
                       const OccupationMeasure& mu);
OccupationMeasure read_measure_csv(const std::filesystem::path& file);

// Interchange carrier for gridded drift fields: everything needed to
// rebuild a DriftField. Slice k*components + c holds component c at time
// index k; values are point samples at the cell centers of the box.
struct DriftFieldData {
  std::vector<double> times;
  BoxGridSpec box;
  int dim = 1;
  int components = 1;
  DriftRegularity declared;
  bool zero_extension = true;
  std::vector<std::vector<double>> slices;

  // Samples f at the cell centers with the same layout DriftField::sample
  // uses (axis 0 slowest).
  static DriftFieldData sample(
      const std::function<std::vector<double>(double, std::span<const double>)>&
          f,
      const std::vector<double>& times, const BoxGridSpec& box,
      int components, DriftRegularity declared, bool zero_extension = true);

  // Validates through the real constructor (shared grid, cell minimum,
  // finite measured Besov norms).
  DriftField to_field() const;
};

// Drift binary container: magic "SBED", version byte 1, u32 dimension, u32
// component count, u64 time count, u8 zero-extension flag, the four
// declared-regularity doubles, per-axis box arrays (lo, hi, u32 cells),
// the time grid, then the slices in time-major component order.
void write_drift_binary(const std::filesystem::path& file,
                        const DriftFieldData& data);
DriftFieldData read_drift_binary(const std::filesystem::path& file);

}  // namespace sbe

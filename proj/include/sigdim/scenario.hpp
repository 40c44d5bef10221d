#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "sigdim/rng.hpp"
#include "sigdim/signal_model.hpp"

namespace sigdim {

/// Sampling recipe for ground-truth scenarios.
struct ScenarioSpec {
    int k_min = 1, k_max = 4;
    double doa_lo_deg = -10.0, doa_hi_deg = 10.0;
    double min_sep_deg = 0.1;
    double power_lo_db = 0.0, power_hi_db = 10.0;
    double snr_db = 30.0;
    bool equal_power = false;
    /// When set: exactly 2 sources with this exact DoA spacing.
    std::optional<double> fixed_sep_deg;

    void validate() const;

    /// K in [1,4], DoAs in [-10, 10] deg, min sep 0.1 deg, powers in [0,10] dB.
    static ScenarioSpec case1();
    /// Same but DoAs constrained to [-5, 5] deg.
    static ScenarioSpec case2();
    /// Training mix: case1 at a fixed 30 dB.
    static ScenarioSpec training_default();
};

/// Ground truth for one trial.
struct Scenario {
    int k = 0;
    std::vector<Source> sources;
    double snr_db = 0.0;
};

/// K uniform on [k_min, k_max]; DoAs i.i.d. uniform, the whole set resampled
/// until every pairwise separation clears min_sep_deg (at most 1e6 attempts);
/// powers uniform in dB unless equal_power; phases uniform on [0, 2pi).
Scenario sample_scenario(const ScenarioSpec& spec, RngStream& rng);

/// 0-based class index k-1; throws if k is outside [1, g_classes].
int build_label(const Scenario& scenario, int g_classes);

// ---- SDIM dataset format ------------------------------------------------------
//
// Little-endian binary: magic "SDIM", u16 version (1), u16 n_elements,
// u16 g_classes, u64 record_count, then per record a u16 label followed by
// 2*N*N binary32 values (real plane row-major, then imaginary plane).

struct DatasetHeader {
    std::uint16_t version = 1;
    std::uint16_t n_elements = 0;
    std::uint16_t g_classes = 0;
    std::uint64_t record_count = 0;
};

struct DatasetRecord {
    std::uint16_t label = 0;            // class index, 0-based
    std::vector<float> image;           // 2*N*N values
};

struct DatagenOptions {
    ArrayConfig array;
    int g_classes = 4;
    bool normalize_input = true;
    /// When non-empty, also dump the raw snapshots as CSV for debugging.
    std::string raw_dump_path;
};

/// Generate `count` labeled records from the spec. Record i draws its own
/// stream from (seed, Dataset domain, i), so identical arguments yield a
/// byte-identical file.
void write_dataset(const std::string& path, const ScenarioSpec& spec, std::uint64_t count,
                   std::uint64_t seed, const DatagenOptions& opt = {});

/// Serialize pre-built records (used for round-trip checks).
void write_dataset_records(const std::string& path, const DatasetHeader& header,
                           const std::vector<DatasetRecord>& records);

/// Sequential reader; validates magic/version and record boundaries.
class DatasetReader {
public:
    explicit DatasetReader(const std::string& path);

    const DatasetHeader& header() const { return header_; }

    /// False at a clean end of file; throws on truncation or trailing bytes.
    bool next(DatasetRecord& out);

private:
    std::ifstream in_;
    DatasetHeader header_;
    std::uint64_t read_ = 0;
    std::size_t record_bytes_ = 0;
    std::vector<char> buf_;
};

std::vector<DatasetRecord> read_dataset(const std::string& path, DatasetHeader* header = nullptr);

}  // namespace sigdim

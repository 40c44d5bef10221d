#include "sigdim/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "sigdim/dlsde.hpp"
#include "sigdim/io_util.hpp"

namespace sigdim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr std::uint64_t kMaxRejectionAttempts = 1000000;
constexpr char kMagic[4] = {'S', 'D', 'I', 'M'};

}  // namespace

void ScenarioSpec::validate() const {
    if (k_min < 1 || k_max < k_min) throw std::invalid_argument("ScenarioSpec: need 1 <= k_min <= k_max");
    if (!(doa_lo_deg < doa_hi_deg)) throw std::invalid_argument("ScenarioSpec: need doa_lo < doa_hi");
    if (doa_lo_deg < -90.0 || doa_hi_deg > 90.0)
        throw std::invalid_argument("ScenarioSpec: DoA interval must lie within [-90, 90]");
    if (min_sep_deg < 0.0) throw std::invalid_argument("ScenarioSpec: min_sep_deg must be >= 0");
    if (static_cast<double>(k_max - 1) * min_sep_deg >= doa_hi_deg - doa_lo_deg)
        throw std::invalid_argument("ScenarioSpec: infeasible, (k_max-1)*min_sep must fit in the DoA interval");
    if (!(power_lo_db <= power_hi_db)) throw std::invalid_argument("ScenarioSpec: need power_lo <= power_hi");
    if (fixed_sep_deg) {
        if (!(*fixed_sep_deg >= 0.0)) throw std::invalid_argument("ScenarioSpec: fixed_sep_deg must be >= 0");
        if (*fixed_sep_deg >= doa_hi_deg - doa_lo_deg)
            throw std::invalid_argument("ScenarioSpec: fixed_sep_deg exceeds the DoA interval");
    }
}

ScenarioSpec ScenarioSpec::case1() { return ScenarioSpec{}; }

ScenarioSpec ScenarioSpec::case2() {
    ScenarioSpec s;
    s.doa_lo_deg = -5.0;
    s.doa_hi_deg = 5.0;
    return s;
}

ScenarioSpec ScenarioSpec::training_default() {
    ScenarioSpec s;
    s.snr_db = 30.0;
    return s;
}

namespace {

cdouble amplitude_from(double power_db, double phase) {
    return std::polar(std::pow(10.0, power_db / 20.0), phase);
}

}  // namespace

Scenario sample_scenario(const ScenarioSpec& spec, RngStream& rng) {
    spec.validate();

    Scenario out;
    out.snr_db = spec.snr_db;

    std::vector<double> doas;
    if (spec.fixed_sep_deg) {
        const double sep = *spec.fixed_sep_deg;
        const double first = rng.uniform(spec.doa_lo_deg, spec.doa_hi_deg - sep);
        doas = {first, first + sep};
    } else {
        const int k = spec.k_min +
                      static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(spec.k_max - spec.k_min + 1)));
        doas.resize(static_cast<std::size_t>(k));
        std::uint64_t attempts = 0;
        for (;;) {
            if (++attempts > kMaxRejectionAttempts)
                throw std::runtime_error("sample_scenario: rejection sampling exceeded 1e6 attempts");
            for (auto& d : doas) d = rng.uniform(spec.doa_lo_deg, spec.doa_hi_deg);
            bool ok = true;
            for (std::size_t i = 0; ok && i < doas.size(); ++i) {
                for (std::size_t j = i + 1; j < doas.size(); ++j) {
                    if (std::abs(doas[i] - doas[j]) < spec.min_sep_deg) {
                        ok = false;
                        break;
                    }
                }
            }
            if (ok) break;
        }
    }

    out.k = static_cast<int>(doas.size());
    out.sources.resize(doas.size());
    for (std::size_t i = 0; i < doas.size(); ++i) {
        const double power_db =
            spec.equal_power ? 0.0 : rng.uniform(spec.power_lo_db, spec.power_hi_db);
        const double phase = rng.uniform(0.0, kTwoPi);
        out.sources[i] = Source{doas[i], amplitude_from(power_db, phase)};
    }
    return out;
}

int build_label(const Scenario& scenario, int g_classes) {
    if (scenario.k < 1 || scenario.k > g_classes)
        throw std::invalid_argument("build_label: k outside [1, g_classes]");
    return scenario.k - 1;
}

// ---- SDIM io -------------------------------------------------------------------

namespace {

std::string encode_header(const DatasetHeader& h) {
    std::string out;
    out.append(kMagic, 4);
    io::put_u16(out, h.version);
    io::put_u16(out, h.n_elements);
    io::put_u16(out, h.g_classes);
    io::put_u64(out, h.record_count);
    return out;
}

void encode_record(std::string& out, const DatasetRecord& rec) {
    io::put_u16(out, rec.label);
    for (float v : rec.image) io::put_f32(out, v);
}

}  // namespace

void write_dataset_records(const std::string& path, const DatasetHeader& header,
                           const std::vector<DatasetRecord>& records) {
    if (header.record_count != records.size())
        throw std::invalid_argument("write_dataset_records: header count mismatch");
    io::AtomicFileWriter w(path);
    w.write(encode_header(header));
    std::string buf;
    for (const auto& rec : records) {
        buf.clear();
        encode_record(buf, rec);
        w.write(buf);
    }
    w.commit();
}

void write_dataset(const std::string& path, const ScenarioSpec& spec, std::uint64_t count,
                   std::uint64_t seed, const DatagenOptions& opt) {
    spec.validate();
    opt.array.validate();
    if (count < 1) throw std::invalid_argument("write_dataset: count must be >= 1");
    if (spec.k_max > opt.g_classes)
        throw std::invalid_argument("write_dataset: k_max exceeds g_classes");

    DatasetHeader header;
    header.n_elements = static_cast<std::uint16_t>(opt.array.n_elements);
    header.g_classes = static_cast<std::uint16_t>(opt.g_classes);
    header.record_count = count;

    io::AtomicFileWriter w(path);
    w.write(encode_header(header));

    std::optional<io::AtomicFileWriter> raw;
    if (!opt.raw_dump_path.empty()) raw.emplace(opt.raw_dump_path);

    std::string buf;
    char line[64];
    for (std::uint64_t i = 0; i < count; ++i) {
        RngStream rng = RngStream::derive(seed, {static_cast<std::uint64_t>(RngDomain::Dataset), i});
        const Scenario scenario = sample_scenario(spec, rng);
        const Snapshot snap = synthesize_snapshot(opt.array, scenario.sources, scenario.snr_db, rng);
        const int label = build_label(scenario, opt.g_classes);
        const nn::Tensor image = build_input(snap, opt.normalize_input);

        DatasetRecord rec;
        rec.label = static_cast<std::uint16_t>(label);
        rec.image.resize(image.size());
        for (std::size_t j = 0; j < image.size(); ++j) rec.image[j] = static_cast<float>(image.data[j]);
        buf.clear();
        encode_record(buf, rec);
        w.write(buf);

        if (raw) {
            std::snprintf(line, sizeof(line), "%llu,%d", static_cast<unsigned long long>(i), label);
            raw->write(line);
            for (const cdouble& v : snap.samples) {
                std::snprintf(line, sizeof(line), ",%.17g,%.17g", v.real(), v.imag());
                raw->write(line);
            }
            raw->write("\n");
        }
    }
    if (raw) raw->commit();
    w.commit();
}

DatasetReader::DatasetReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open dataset: " + path);
    char head[18];
    if (!in_.read(head, sizeof(head))) throw std::runtime_error("truncated dataset header: " + path);
    io::Cursor cur(head, sizeof(head));
    char magic[4];
    cur.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("bad dataset magic: " + path);
    header_.version = cur.u16();
    if (header_.version != 1) throw std::runtime_error("unsupported dataset version");
    header_.n_elements = cur.u16();
    header_.g_classes = cur.u16();
    header_.record_count = cur.u64();
    if (header_.n_elements < 2) throw std::runtime_error("dataset header: bad n_elements");
    const std::size_t n = header_.n_elements;
    record_bytes_ = 2 + 2 * n * n * 4;
    buf_.resize(record_bytes_);
}

bool DatasetReader::next(DatasetRecord& out) {
    if (read_ == header_.record_count) {
        // Must be exactly at end of file now.
        if (in_.peek() != std::char_traits<char>::eof())
            throw std::runtime_error("dataset has trailing bytes beyond record_count");
        return false;
    }
    if (!in_.read(buf_.data(), static_cast<std::streamsize>(record_bytes_)))
        throw std::runtime_error("truncated dataset record");
    io::Cursor cur(buf_.data(), record_bytes_);
    out.label = cur.u16();
    const std::size_t n = header_.n_elements;
    out.image.resize(2 * n * n);
    for (auto& v : out.image) v = cur.f32();
    ++read_;
    return true;
}

std::vector<DatasetRecord> read_dataset(const std::string& path, DatasetHeader* header) {
    DatasetReader reader(path);
    if (header) *header = reader.header();
    std::vector<DatasetRecord> out;
    out.reserve(static_cast<std::size_t>(reader.header().record_count));
    DatasetRecord rec;
    while (reader.next(rec)) out.push_back(rec);
    return out;
}

}  // namespace sigdim

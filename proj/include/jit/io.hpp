#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jit/cost.hpp"
#include "jit/importance.hpp"
#include "jit/sampler.hpp"
#include "jit/schedule.hpp"
#include "jit/toy_models.hpp"

namespace jit::io {

using Bytes = std::vector<std::uint8_t>;

// ---- JITG grid files -------------------------------------------------------
//
// "JITG", then little-endian u32 version (1), h_tok, w_tok, d, then
// h_tok * w_tok * d little-endian IEEE-754 binary32 values, token-row-major
// then channel.

inline constexpr std::uint32_t kGridVersion = 1;
inline constexpr std::size_t kGridHeaderBytes = 20;

Bytes encode_grid(const Grid& grid);
Grid decode_grid(const Bytes& bytes);
void write_grid(const std::filesystem::path& path, const Grid& grid);
Grid read_grid(const std::filesystem::path& path);

// ---- PGM heatmaps ----------------------------------------------------------

/// Binary P5, maxval 255, min-max normalized; a constant input maps to 128.
Bytes encode_pgm(const Eigen::MatrixXd& image);
void write_pgm(const std::filesystem::path& path, const ImportanceMap& map);
/// Uses channel `channel` of the grid.
void write_pgm(const std::filesystem::path& path, const Grid& grid, TokenIndex channel = 0);

// ---- Run configuration -----------------------------------------------------

struct ScheduleConfig {
    std::optional<std::string> preset;
    std::vector<StageSpec> stages;
    int n_steps = 0;
    double alpha = kWarpAlpha;
    double beta = kWarpBeta;
    std::string name = "custom";

    friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

struct FieldConfig {
    std::string kind = "gaussian-bump"; // gaussian-bump | smooth-gradient | checkerboard | replay
    double sigma1 = 0.0;
    TargetParams target;
    std::string manifest; // replay fixtures
    bool strict = true;

    friend bool operator==(const FieldConfig&, const FieldConfig&) = default;
};

struct DumpPaths {
    std::string grid;
    std::string report;
    std::string importance; // directory
    std::string metrics;
    std::string trajectory; // directory

    friend bool operator==(const DumpPaths&, const DumpPaths&) = default;
};

struct RunConfig {
    ScheduleConfig schedule;
    GridShape shape{32, 32, 4};
    FieldConfig field;
    std::uint64_t seed = 0;
    bool invert_time = false;
    bool shared_noise = false;
    int trajectory_stride = 0;
    int importance_window = 3;
    DumpPaths dump;
    CostModel cost;
    int baseline_steps = 50;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct ParsedConfig {
    RunConfig config;
    std::vector<std::string> warnings; // unknown keys
};

ParsedConfig parse_config(const nlohmann::json& doc);
ParsedConfig read_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& config);
void write_config(const std::filesystem::path& path, const RunConfig& config);

StageSchedule resolve_schedule(const RunConfig& config);
std::shared_ptr<const VelocityField> make_field(const RunConfig& config);
SamplerOptions sampler_options(const RunConfig& config);

// ---- Reports ---------------------------------------------------------------

/// Rounds to 9 significant digits so emitted text is stable and float32
/// values survive the round trip.
double round_sig9(double v);

nlohmann::json report_to_json(const RunReport& report);
std::string dump_json(const nlohmann::json& doc);
void write_report(const std::filesystem::path& path, const RunReport& report);

/// step,t,stage,m_k,cost
std::string metrics_csv(const RunReport& report);
/// Stage table followed by the timestep list.
std::string schedule_csv(const StageSchedule& schedule, std::optional<TokenIndex> n_tokens = std::nullopt);
/// schedule,c_attn,c_lin,c_fix,n_ctx,total,baseline,speedup
std::string cost_csv_header();
std::string cost_csv_row(const std::string& name, const CostModel& model, const ScheduleCost& cost);

// ---- Replay fixtures -------------------------------------------------------

/// manifest.json {"entries": [{"indices": [...], "t": ..., "file": "..."}]}
/// plus one JITG file per block (h_tok = m, w_tok = 1).
void write_replay_fixture(const std::filesystem::path& dir, const std::map<ReplayKey, Block>& entries);
std::map<ReplayKey, Block> read_replay_fixture(const std::filesystem::path& manifest);

// ---- Files -----------------------------------------------------------------

/// Writes to a sibling temp file and renames over the destination.
void write_file_atomic(const std::filesystem::path& path, const Bytes& bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
Bytes read_file(const std::filesystem::path& path);

} // namespace jit::io

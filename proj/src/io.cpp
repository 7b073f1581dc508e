#include "jit/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace jit::io {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- files -----------------------------------------------------------------

void write_file_atomic(const fs::path& path, const Bytes& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorKind::Format, "cannot open " + tmp.string() + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        require(static_cast<bool>(out), ErrorKind::Format, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_file_atomic(const fs::path& path, const std::string& text) {
    write_file_atomic(path, Bytes(text.begin(), text.end()));
}

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Format, "cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// ---- JITG ------------------------------------------------------------------

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>((v >> (8 * b)) & 0xFFu));
}

std::uint32_t get_u32(const Bytes& in, std::size_t offset) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in[offset + static_cast<std::size_t>(b)]) << (8 * b);
    return v;
}

[[noreturn]] void format_error(std::size_t offset, const std::string& what) {
    fail(ErrorKind::Format, what + " at byte offset " + std::to_string(offset));
}

} // namespace

Bytes encode_grid(const Grid& grid) {
    Bytes out;
    out.reserve(kGridHeaderBytes + 4 * static_cast<std::size_t>(grid.tokens().size()));
    for (char c : {'J', 'I', 'T', 'G'}) out.push_back(static_cast<std::uint8_t>(c));
    put_u32(out, kGridVersion);
    put_u32(out, static_cast<std::uint32_t>(grid.h_tok()));
    put_u32(out, static_cast<std::uint32_t>(grid.w_tok()));
    put_u32(out, static_cast<std::uint32_t>(grid.channels()));
    for (float v : grid.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

Grid decode_grid(const Bytes& bytes) {
    if (bytes.size() < 4) format_error(bytes.size(), "truncated magic");
    if (!(bytes[0] == 'J' && bytes[1] == 'I' && bytes[2] == 'T' && bytes[3] == 'G')) format_error(0, "bad magic");
    if (bytes.size() < kGridHeaderBytes) format_error(bytes.size(), "truncated header");
    const std::uint32_t version = get_u32(bytes, 4);
    if (version != kGridVersion) format_error(4, "unsupported version " + std::to_string(version));
    const std::uint32_t h = get_u32(bytes, 8), w = get_u32(bytes, 12), d = get_u32(bytes, 16);
    if (h == 0) format_error(8, "zero h_tok");
    if (w == 0) format_error(12, "zero w_tok");
    if (d == 0) format_error(16, "zero channel count");
    const std::uint64_t count = std::uint64_t{h} * w * d;
    const std::uint64_t expected = kGridHeaderBytes + 4 * count;
    if (bytes.size() < expected)
        format_error(bytes.size(), "truncated payload (expected " + std::to_string(expected) + " bytes)");
    if (bytes.size() > expected) format_error(expected, "trailing data");
    Grid grid(GridShape{static_cast<TokenIndex>(h), static_cast<TokenIndex>(w), static_cast<TokenIndex>(d)});
    auto values = grid.data();
    for (std::size_t j = 0; j < values.size(); ++j)
        values[j] = std::bit_cast<float>(get_u32(bytes, kGridHeaderBytes + 4 * j));
    return grid;
}

void write_grid(const fs::path& path, const Grid& grid) { write_file_atomic(path, encode_grid(grid)); }

Grid read_grid(const fs::path& path) { return decode_grid(read_file(path)); }

// ---- PGM -------------------------------------------------------------------

Bytes encode_pgm(const Eigen::MatrixXd& image) {
    require(image.rows() >= 1 && image.cols() >= 1, ErrorKind::Dimension, "image must be at least 1x1");
    const std::string header =
        "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n";
    Bytes out(header.begin(), header.end());
    const double lo = image.minCoeff(), hi = image.maxCoeff();
    for (Eigen::Index r = 0; r < image.rows(); ++r) {
        for (Eigen::Index c = 0; c < image.cols(); ++c) {
            std::uint8_t px = 128;
            if (hi > lo) px = static_cast<std::uint8_t>(std::lround(255.0 * (image(r, c) - lo) / (hi - lo)));
            out.push_back(px);
        }
    }
    return out;
}

void write_pgm(const fs::path& path, const ImportanceMap& map) {
    Eigen::MatrixXd image(map.h_tok, map.w_tok);
    for (TokenIndex r = 0; r < map.h_tok; ++r)
        for (TokenIndex c = 0; c < map.w_tok; ++c) image(r, c) = map.at(r, c);
    write_file_atomic(path, encode_pgm(image));
}

void write_pgm(const fs::path& path, const Grid& grid, TokenIndex channel) {
    require(channel >= 0 && channel < grid.channels(), ErrorKind::Dimension, "channel out of range");
    Eigen::MatrixXd image(grid.h_tok(), grid.w_tok());
    for (TokenIndex r = 0; r < grid.h_tok(); ++r)
        for (TokenIndex c = 0; c < grid.w_tok(); ++c) image(r, c) = grid.at(r, c, channel);
    write_file_atomic(path, encode_pgm(image));
}

// ---- config ----------------------------------------------------------------

namespace {

class ObjectReader {
public:
    ObjectReader(const json& obj, std::string where, std::vector<std::string>& warnings)
        : obj_(obj), where_(std::move(where)), warnings_(warnings) {
        require(obj_.is_object(), ErrorKind::Config, where_.empty() ? "config root must be an object" : where_ + " must be an object");
    }

    ~ObjectReader() {
        for (const auto& [key, _] : obj_.items())
            if (!seen_.count(key)) warnings_.push_back("unknown key '" + path(key) + "'");
    }

    ObjectReader(const ObjectReader&) = delete;
    ObjectReader& operator=(const ObjectReader&) = delete;

    bool has(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key);
    }

    const json& at(const std::string& key) {
        seen_.insert(key);
        require(obj_.contains(key), ErrorKind::Config, "missing required key '" + path(key) + "'");
        return obj_.at(key);
    }

    template <typename T>
    T get(const std::string& key) {
        const json& v = at(key);
        try {
            return v.get<T>();
        } catch (const json::exception&) {
            fail(ErrorKind::Config, "key '" + path(key) + "' has the wrong type");
        }
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) {
        return has(key) ? get<T>(key) : fallback;
    }

    std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

private:
    const json& obj_;
    std::string where_;
    std::vector<std::string>& warnings_;
    std::set<std::string> seen_;
};

StageSpec parse_stage(const json& j, const std::string& where, std::vector<std::string>& warnings) {
    ObjectReader r(j, where, warnings);
    return StageSpec{r.get<int>("steps"), r.get<double>("sparsity")};
}

} // namespace

ParsedConfig parse_config(const json& doc) {
    ParsedConfig parsed;
    RunConfig& cfg = parsed.config;
    std::vector<std::string>& warnings = parsed.warnings;
    ObjectReader root(doc, "", warnings);

    const bool has_preset = root.has("preset");
    const bool has_schedule = root.has("schedule");
    require(has_preset || has_schedule, ErrorKind::Config, "missing required key 'preset' (or 'schedule')");
    require(!(has_preset && has_schedule), ErrorKind::Config, "keys 'preset' and 'schedule' are mutually exclusive");
    if (has_preset) {
        cfg.schedule.preset = root.get<std::string>("preset");
    } else {
        ObjectReader s(root.at("schedule"), "schedule", warnings);
        const json& stages = s.at("stages");
        require(stages.is_array() && !stages.empty(), ErrorKind::Config, "key 'schedule.stages' must be a non-empty array");
        for (std::size_t p = 0; p < stages.size(); ++p)
            cfg.schedule.stages.push_back(parse_stage(stages[p], "schedule.stages[" + std::to_string(p) + "]", warnings));
        int total = 0;
        for (const StageSpec& st : cfg.schedule.stages) total += st.steps;
        cfg.schedule.n_steps = s.get_or<int>("n_steps", total);
        cfg.schedule.alpha = s.get_or<double>("alpha", kWarpAlpha);
        cfg.schedule.beta = s.get_or<double>("beta", kWarpBeta);
        cfg.schedule.name = s.get_or<std::string>("name", "custom");
    }

    const json& shape = root.at("shape");
    require(shape.is_array() && shape.size() == 3, ErrorKind::Config, "key 'shape' must be [h_tok, w_tok, d]");
    for (const json& v : shape)
        require(v.is_number_integer() && v.get<long long>() >= 1, ErrorKind::Config, "key 'shape' entries must be integers >= 1");
    cfg.shape = GridShape{shape[0].get<TokenIndex>(), shape[1].get<TokenIndex>(), shape[2].get<TokenIndex>()};

    {
        ObjectReader f(root.at("field"), "field", warnings);
        cfg.field.kind = f.get<std::string>("kind");
        cfg.field.sigma1 = f.get_or<double>("sigma1", 0.0);
        cfg.field.target.low = f.get_or<double>("low", 0.0);
        cfg.field.target.high = f.get_or<double>("high", 1.0);
        cfg.field.target.bump_width = f.get_or<double>("bump_width", 0.0);
        cfg.field.manifest = f.get_or<std::string>("manifest", "");
        cfg.field.strict = f.get_or<bool>("strict", true);
        static const std::set<std::string> kinds{"gaussian-bump", "smooth-gradient", "checkerboard", "replay"};
        require(kinds.count(cfg.field.kind) == 1, ErrorKind::Config, "key 'field.kind' has unknown value '" + cfg.field.kind + "'");
        require(cfg.field.kind != "replay" || !cfg.field.manifest.empty(), ErrorKind::Config,
                "missing required key 'field.manifest' for replay field");
    }

    {
        const json& seed = root.at("seed");
        require(seed.is_number_integer() && (seed.is_number_unsigned() || seed.get<long long>() >= 0), ErrorKind::Config,
                "key 'seed' must be a non-negative integer");
        cfg.seed = seed.get<std::uint64_t>();
    }

    if (root.has("options")) {
        ObjectReader o(root.at("options"), "options", warnings);
        cfg.invert_time = o.get_or<bool>("invert_time", false);
        cfg.shared_noise = o.get_or<bool>("shared_noise", false);
        cfg.trajectory_stride = o.get_or<int>("trajectory_stride", 0);
        cfg.importance_window = o.get_or<int>("importance_window", 3);
        if (o.has("dump")) {
            ObjectReader d(o.at("dump"), "options.dump", warnings);
            cfg.dump.grid = d.get_or<std::string>("grid", "");
            cfg.dump.report = d.get_or<std::string>("report", "");
            cfg.dump.importance = d.get_or<std::string>("importance", "");
            cfg.dump.metrics = d.get_or<std::string>("metrics", "");
            cfg.dump.trajectory = d.get_or<std::string>("trajectory", "");
        }
    }

    if (root.has("cost_model")) {
        ObjectReader c(root.at("cost_model"), "cost_model", warnings);
        cfg.cost.c_attn = c.get_or<double>("c_attn", 1.0);
        cfg.cost.c_lin = c.get_or<double>("c_lin", 0.0);
        cfg.cost.c_fix = c.get_or<double>("c_fix", 0.0);
        cfg.cost.n_ctx = c.get_or<double>("n_ctx", 0.0);
    }
    cfg.baseline_steps = root.get_or<int>("baseline_steps", 50);
    require(cfg.baseline_steps >= 1, ErrorKind::Config, "key 'baseline_steps' must be >= 1");
    return parsed;
}

ParsedConfig read_config(const fs::path& path) {
    const Bytes raw = read_file(path);
    json doc;
    try {
        doc = json::parse(raw.begin(), raw.end());
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Config, path.string() + ": malformed JSON (" + e.what() + ")");
    }
    return parse_config(doc);
}

json config_to_json(const RunConfig& cfg) {
    json doc;
    if (cfg.schedule.preset) {
        doc["preset"] = *cfg.schedule.preset;
    } else {
        json stages = json::array();
        for (const StageSpec& st : cfg.schedule.stages) stages.push_back({{"steps", st.steps}, {"sparsity", st.sparsity}});
        doc["schedule"] = {{"stages", stages},
                           {"n_steps", cfg.schedule.n_steps},
                           {"alpha", cfg.schedule.alpha},
                           {"beta", cfg.schedule.beta},
                           {"name", cfg.schedule.name}};
    }
    doc["shape"] = {cfg.shape.h_tok, cfg.shape.w_tok, cfg.shape.d};
    doc["field"] = {{"kind", cfg.field.kind},
                    {"sigma1", cfg.field.sigma1},
                    {"low", cfg.field.target.low},
                    {"high", cfg.field.target.high},
                    {"bump_width", cfg.field.target.bump_width},
                    {"manifest", cfg.field.manifest},
                    {"strict", cfg.field.strict}};
    doc["seed"] = cfg.seed;
    doc["options"] = {{"invert_time", cfg.invert_time},
                      {"shared_noise", cfg.shared_noise},
                      {"trajectory_stride", cfg.trajectory_stride},
                      {"importance_window", cfg.importance_window},
                      {"dump",
                       {{"grid", cfg.dump.grid},
                        {"report", cfg.dump.report},
                        {"importance", cfg.dump.importance},
                        {"metrics", cfg.dump.metrics},
                        {"trajectory", cfg.dump.trajectory}}}};
    doc["cost_model"] = {{"c_attn", cfg.cost.c_attn}, {"c_lin", cfg.cost.c_lin}, {"c_fix", cfg.cost.c_fix}, {"n_ctx", cfg.cost.n_ctx}};
    doc["baseline_steps"] = cfg.baseline_steps;
    return doc;
}

void write_config(const fs::path& path, const RunConfig& config) {
    write_file_atomic(path, dump_json(config_to_json(config)));
}

StageSchedule resolve_schedule(const RunConfig& cfg) {
    if (cfg.schedule.preset) return preset_schedule(*cfg.schedule.preset, cfg.invert_time);
    return build_schedule(cfg.schedule.stages, cfg.schedule.n_steps, cfg.schedule.alpha, cfg.schedule.beta,
                          cfg.schedule.name, cfg.invert_time);
}

std::shared_ptr<const VelocityField> make_field(const RunConfig& cfg) {
    if (cfg.field.kind == "replay") {
        std::shared_ptr<const VelocityField> fallback;
        if (!cfg.field.strict) fallback = std::make_shared<GaussianFlowField>(Grid(cfg.shape), cfg.field.sigma1);
        return std::make_shared<ReplayField>(read_replay_fixture(cfg.field.manifest), cfg.field.strict, fallback);
    }
    return std::make_shared<GaussianFlowField>(make_target_image(cfg.field.kind, cfg.shape, cfg.field.target),
                                               cfg.field.sigma1);
}

SamplerOptions sampler_options(const RunConfig& cfg) {
    SamplerOptions o;
    o.shared_noise = cfg.shared_noise;
    o.trajectory_stride = cfg.trajectory_stride;
    o.importance_window = cfg.importance_window;
    o.cost = cfg.cost;
    o.baseline_steps = cfg.baseline_steps;
    return o;
}

// ---- reports ---------------------------------------------------------------

double round_sig9(double v) {
    if (!std::isfinite(v) || v == 0.0) return v;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

namespace {

json index_array(const IndexSet& set) { return json(set.indices()); }

} // namespace

json report_to_json(const RunReport& report) {
    json doc;
    doc["schedule"] = report.schedule_name;
    doc["field"] = report.field;
    doc["seed"] = report.seed;
    doc["shape"] = {report.shape.h_tok, report.shape.w_tok, report.shape.d};
    doc["nfe"] = report.nfe;
    doc["baseline_steps"] = report.baseline_steps;
    doc["total_cost"] = round_sig9(report.total_cost);
    doc["baseline_cost"] = round_sig9(report.baseline_cost);
    doc["speedup"] = round_sig9(report.speedup);

    json t = json::array();
    for (double v : report.timesteps) t.push_back(round_sig9(v));
    doc["timesteps"] = t;

    json steps = json::array();
    for (const StepRecord& s : report.steps)
        steps.push_back({{"step", s.step}, {"t", round_sig9(s.t)}, {"stage", s.stage}, {"m_k", s.active}, {"cost", round_sig9(s.cost)}});
    doc["steps"] = steps;

    json transitions = json::array();
    for (const TransitionRecord& tr : report.transitions) {
        transitions.push_back({{"step", tr.step_index},
                               {"stage_from", tr.stage_from},
                               {"stage_to", tr.stage_to},
                               {"T_k", round_sig9(tr.T_k)},
                               {"activated_count", tr.activated.size()},
                               {"activated", index_array(tr.activated)},
                               {"importance_max", round_sig9(tr.importance.scores.maxCoeff())},
                               {"importance_mean", round_sig9(tr.importance.scores.mean())}});
    }
    doc["transitions"] = transitions;

    json chain = json::array();
    for (const IndexSet& s : report.chain) chain.push_back(s.size());
    doc["chain_sizes"] = chain;

    const Eigen::ArrayXd v = report.endpoint.tokens().cast<double>().reshaped().array();
    const double mean = v.mean();
    doc["endpoint"] = {{"mean", round_sig9(mean)},
                       {"std", round_sig9(std::sqrt((v - mean).square().mean()))},
                       {"min", round_sig9(v.minCoeff())},
                       {"max", round_sig9(v.maxCoeff())}};
    return doc;
}

void write_report(const fs::path& path, const RunReport& report) {
    write_file_atomic(path, dump_json(report_to_json(report)));
}

namespace {

std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

std::string metrics_csv(const RunReport& report) {
    std::ostringstream os;
    os << "step,t,stage,m_k,cost\n";
    for (const StepRecord& s : report.steps)
        os << s.step << ',' << fmt9(s.t) << ',' << s.stage << ',' << s.active << ',' << fmt9(s.cost) << '\n';
    return os.str();
}

std::string schedule_csv(const StageSchedule& schedule, std::optional<TokenIndex> n_tokens) {
    std::ostringstream os;
    std::vector<TokenIndex> budgets;
    if (n_tokens) budgets = stage_budgets(schedule, *n_tokens);
    os << "# schedule " << schedule.name << ", stages " << schedule.num_stages() << ", nfe " << schedule.nfe()
       << ", alpha " << fmt9(schedule.alpha) << ", beta " << fmt9(schedule.beta)
       << (schedule.invert_time ? ", inverted" : "") << '\n';
    os << "stage,level,steps,sparsity,first_step,T_k" << (n_tokens ? ",m_k" : "") << '\n';
    int first = 0;
    for (int p = 0; p < schedule.num_stages(); ++p) {
        const StageSpec& st = schedule.stages[static_cast<std::size_t>(p)];
        os << p << ',' << schedule.coarsest_level() - p << ',' << st.steps << ',' << fmt9(st.sparsity) << ',' << first
           << ',' << fmt9(schedule.timesteps[static_cast<std::size_t>(first)]);
        if (n_tokens) os << ',' << budgets[static_cast<std::size_t>(p)];
        os << '\n';
        first += st.steps;
    }
    os << "step,t\n";
    for (std::size_t i = 0; i < schedule.timesteps.size(); ++i) os << i << ',' << fmt9(schedule.timesteps[i]) << '\n';
    return os.str();
}

std::string cost_csv_header() { return "schedule,c_attn,c_lin,c_fix,n_ctx,total,baseline,speedup\n"; }

std::string cost_csv_row(const std::string& name, const CostModel& m, const ScheduleCost& c) {
    std::ostringstream os;
    os << name << ',' << fmt9(m.c_attn) << ',' << fmt9(m.c_lin) << ',' << fmt9(m.c_fix) << ',' << fmt9(m.n_ctx) << ','
       << fmt9(c.total) << ',' << fmt9(c.baseline) << ',' << fmt9(c.speedup) << '\n';
    return os.str();
}

// ---- replay fixtures -------------------------------------------------------

void write_replay_fixture(const fs::path& dir, const std::map<ReplayKey, Block>& entries) {
    fs::create_directories(dir);
    json list = json::array();
    std::size_t n = 0;
    for (const auto& [key, block] : entries) {
        char name[32];
        std::snprintf(name, sizeof name, "block_%05zu.jitg", n++);
        const GridShape shape{block.rows(), 1, block.cols()};
        write_grid(dir / name, Grid(shape, block));
        list.push_back({{"indices", key.indices}, {"t", key.t}, {"file", name}});
    }
    write_file_atomic(dir / "manifest.json", dump_json(json{{"entries", list}}));
}

std::map<ReplayKey, Block> read_replay_fixture(const fs::path& manifest) {
    const Bytes raw = read_file(manifest);
    json doc;
    try {
        doc = json::parse(raw.begin(), raw.end());
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Format, manifest.string() + ": malformed manifest (" + e.what() + ")");
    }
    require(doc.is_object() && doc.contains("entries") && doc["entries"].is_array(), ErrorKind::Format,
            manifest.string() + ": manifest needs an 'entries' array");
    std::map<ReplayKey, Block> out;
    for (const json& e : doc["entries"]) {
        try {
            ReplayKey key{e.at("indices").get<std::vector<TokenIndex>>(), e.at("t").get<double>()};
            const Grid g = read_grid(manifest.parent_path() / e.at("file").get<std::string>());
            require(g.size() == static_cast<TokenIndex>(key.indices.size()), ErrorKind::Format,
                    "replay block size does not match its indices");
            out.emplace(std::move(key), g.tokens());
        } catch (const json::exception& ex) {
            fail(ErrorKind::Format, manifest.string() + ": bad manifest entry (" + ex.what() + ")");
        }
    }
    return out;
}

} // namespace jit::io

#include "fcp/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fcp/errors.hpp"

namespace fcp {

void RunConfig::validate() const {
    if (dataset.base_classes < 2 || dataset.novel_classes < 2)
        throw ConfigError("config: need >= 2 base and >= 2 novel classes");
    if (dataset.channels < 1 || dataset.height < 1 || dataset.width < 1)
        throw ConfigError("config: non-positive dataset dimensions");
    if (tokens < 1) throw ConfigError("config: tokens must be >= 1");
    if (steps < 2) throw ConfigError("config: steps must be >= 2");
    if (decoder_hidden < 1) throw ConfigError("config: decoder_hidden must be >= 1");
    if (lr <= 0) throw ConfigError("config: lr must be positive");
    if (weight_decay < 0) throw ConfigError("config: negative weight_decay");
    if (train_steps < 0) throw ConfigError("config: negative train_steps");
    if (batch_episodes < 1) throw ConfigError("config: batch_episodes must be >= 1");
    if (eval_episodes < 1) throw ConfigError("config: eval_episodes must be >= 1");
    if (shots < 1) throw ConfigError("config: shots must be >= 1");
    loss_config().validate();
    parse_variant(variant);
}

ModelConfig RunConfig::model_config() const {
    ModelConfig mc;
    mc.tokens = tokens;
    mc.channels = dataset.channels;
    mc.steps = steps;
    mc.decoder_hidden = decoder_hidden;
    return mc;
}

LossConfig RunConfig::loss_config() const {
    LossConfig lc;
    lc.lambda_ortho = lambda_ortho;
    lc.lambda_guide = lambda_guide;
    lc.eps = loss_eps;
    lc.ortho_includes_final_step = ortho_includes_final_step;
    return lc;
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    if constexpr (std::is_floating_point_v<T>) {
        try {
            std::size_t pos = 0;
            value = static_cast<T>(std::stod(text, &pos));
            if (pos != text.size()) throw std::invalid_argument(text);
        } catch (const std::exception&) {
            throw ConfigError("config: bad numeric value for " + key + ": " + text);
        }
    } else {
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size())
            throw ConfigError("config: bad integer value for " + key + ": " + text);
    }
    return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ConfigError("config: bad boolean value for " + key + ": " + text);
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");

        if (key == "base_classes") cfg.dataset.base_classes = parse_number<int>(key, value);
        else if (key == "novel_classes") cfg.dataset.novel_classes = parse_number<int>(key, value);
        else if (key == "channels") cfg.dataset.channels = parse_number<int>(key, value);
        else if (key == "height") cfg.dataset.height = parse_number<int>(key, value);
        else if (key == "width") cfg.dataset.width = parse_number<int>(key, value);
        else if (key == "sigma_sam") cfg.dataset.sigma_sam = parse_number<double>(key, value);
        else if (key == "sigma_img") cfg.dataset.sigma_img = parse_number<double>(key, value);
        else if (key == "sigma_pix") cfg.dataset.sigma_pix = parse_number<double>(key, value);
        else if (key == "dataset_seed") cfg.dataset.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "tokens") cfg.tokens = parse_number<int>(key, value);
        else if (key == "steps") cfg.steps = parse_number<int>(key, value);
        else if (key == "decoder_hidden") cfg.decoder_hidden = parse_number<int>(key, value);
        else if (key == "lr") cfg.lr = parse_number<double>(key, value);
        else if (key == "weight_decay") cfg.weight_decay = parse_number<double>(key, value);
        else if (key == "train_steps") cfg.train_steps = parse_number<std::int64_t>(key, value);
        else if (key == "batch_episodes") cfg.batch_episodes = parse_number<int>(key, value);
        else if (key == "lambda_ortho") cfg.lambda_ortho = parse_number<double>(key, value);
        else if (key == "lambda_guide") cfg.lambda_guide = parse_number<double>(key, value);
        else if (key == "loss_eps") cfg.loss_eps = parse_number<double>(key, value);
        else if (key == "ortho_includes_final_step")
            cfg.ortho_includes_final_step = parse_bool(key, value);
        else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "eval_episodes") cfg.eval_episodes = parse_number<int>(key, value);
        else if (key == "shots") cfg.shots = parse_number<int>(key, value);
        else if (key == "variant") cfg.variant = value;
        else if (key == "out_dir") cfg.out_dir = value;
        else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key " + key);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "base_classes = " << cfg.dataset.base_classes << "\n";
    out << "novel_classes = " << cfg.dataset.novel_classes << "\n";
    out << "channels = " << cfg.dataset.channels << "\n";
    out << "height = " << cfg.dataset.height << "\n";
    out << "width = " << cfg.dataset.width << "\n";
    out << "sigma_sam = " << cfg.dataset.sigma_sam << "\n";
    out << "sigma_img = " << cfg.dataset.sigma_img << "\n";
    out << "sigma_pix = " << cfg.dataset.sigma_pix << "\n";
    out << "dataset_seed = " << cfg.dataset.seed << "\n";
    out << "tokens = " << cfg.tokens << "\n";
    out << "steps = " << cfg.steps << "\n";
    out << "decoder_hidden = " << cfg.decoder_hidden << "\n";
    out << "lr = " << cfg.lr << "\n";
    out << "weight_decay = " << cfg.weight_decay << "\n";
    out << "train_steps = " << cfg.train_steps << "\n";
    out << "batch_episodes = " << cfg.batch_episodes << "\n";
    out << "lambda_ortho = " << cfg.lambda_ortho << "\n";
    out << "lambda_guide = " << cfg.lambda_guide << "\n";
    out << "loss_eps = " << cfg.loss_eps << "\n";
    out << "ortho_includes_final_step = " << (cfg.ortho_includes_final_step ? "true" : "false")
        << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "eval_episodes = " << cfg.eval_episodes << "\n";
    out << "shots = " << cfg.shots << "\n";
    out << "variant = " << cfg.variant << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    return out.str();
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file " + path);
    out << serialize_run_config(cfg);
    if (!out) throw ConfigError("write failure on " + path);
}

}  // namespace fcp

#include "seqcast/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace seqcast {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
    try {
        const long long n = std::stoll(v);
        if (n < 0) throw std::out_of_range("negative");
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for " + key + ": " + v);
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for " + key + ": " + v);
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

} // namespace

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not key=value: " + line);
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_kv_text(ss.str());
}

void apply_config(const std::map<std::string, std::string>& kv,
                  ModelConfig& m, TrainConfig& t) {
    for (const auto& [key, v] : kv) {
        if (key == "K") m.K = to_size(key, v);
        else if (key == "L") m.L = to_size(key, v);
        else if (key == "T") m.T = to_size(key, v);
        else if (key == "s") m.s = to_size(key, v);
        else if (key == "d_model") m.d_model = to_size(key, v);
        else if (key == "N") m.N = to_size(key, v);
        else if (key == "d_state") m.d_state = to_size(key, v);
        else if (key == "expand") m.expand = to_size(key, v);
        else if (key == "conv_width") m.conv_width = to_size(key, v);
        else if (key == "dropout_rate") m.dropout_rate = to_double(key, v);
        else if (key == "beta") m.beta = to_double(key, v);
        else if (key == "seed") m.seed = to_size(key, v);
        else if (key == "vst") m.vst = to_bool(key, v);
        else if (key == "gate_mode") {
            if (v == "multiply") m.gate_mode = GateMode::multiply;
            else if (v == "add") m.gate_mode = GateMode::add;
            else throw std::invalid_argument("config: gate_mode must be multiply or add");
        } else if (key == "block_variant") {
            if (v == "temporal") m.block_variant = BlockVariant::temporal;
            else if (v == "vanilla") m.block_variant = BlockVariant::vanilla;
            else throw std::invalid_argument("config: block_variant must be temporal or vanilla");
        }
        else if (key == "lr") t.lr = to_double(key, v);
        else if (key == "adam_beta1") t.adam_beta1 = to_double(key, v);
        else if (key == "adam_beta2") t.adam_beta2 = to_double(key, v);
        else if (key == "adam_eps") t.adam_eps = to_double(key, v);
        else if (key == "clip_norm") t.clip_norm = to_double(key, v);
        else if (key == "batch_size") t.batch_size = to_size(key, v);
        else if (key == "epochs") t.epochs = to_size(key, v);
        else if (key == "patience") t.patience = to_size(key, v);
        else if (key == "vpt") t.vpt = to_bool(key, v);
        else if (key == "max_batches_per_epoch") t.max_batches_per_epoch = to_size(key, v);
        else if (key == "max_windows") t.max_windows = to_size(key, v);
        else if (key == "train_ratio") t.train_ratio = to_double(key, v);
        else if (key == "val_ratio") t.val_ratio = to_double(key, v);
        else if (key == "standardize") t.standardize = to_bool(key, v);
        else throw std::invalid_argument("config: unknown key " + key);
    }
}

std::string config_to_text(const ModelConfig& m, const TrainConfig& t) {
    std::ostringstream os;
    os.precision(17);
    os << "K=" << m.K << "\nL=" << m.L << "\nT=" << m.T << "\ns=" << m.s
       << "\nd_model=" << m.d_model << "\nN=" << m.N
       << "\nd_state=" << m.d_state << "\nexpand=" << m.expand
       << "\nconv_width=" << m.conv_width
       << "\ndropout_rate=" << m.dropout_rate
       << "\ngate_mode=" << (m.gate_mode == GateMode::multiply ? "multiply" : "add")
       << "\nblock_variant="
       << (m.block_variant == BlockVariant::temporal ? "temporal" : "vanilla")
       << "\nvst=" << (m.vst ? "true" : "false") << "\nbeta=" << m.beta
       << "\nseed=" << m.seed << "\nlr=" << t.lr
       << "\nadam_beta1=" << t.adam_beta1 << "\nadam_beta2=" << t.adam_beta2
       << "\nadam_eps=" << t.adam_eps << "\nclip_norm=" << t.clip_norm
       << "\nbatch_size=" << t.batch_size << "\nepochs=" << t.epochs
       << "\npatience=" << t.patience << "\nvpt=" << (t.vpt ? "true" : "false")
       << "\nmax_batches_per_epoch=" << t.max_batches_per_epoch
       << "\nmax_windows=" << t.max_windows
       << "\ntrain_ratio=" << t.train_ratio << "\nval_ratio=" << t.val_ratio
       << "\nstandardize=" << (t.standardize ? "true" : "false") << "\n";
    return os.str();
}

} // namespace seqcast

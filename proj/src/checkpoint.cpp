#include "seqcast/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace seqcast {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'M', 'F'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

void write_f64(std::ostream& out, const double* data, std::size_t n) {
    static_assert(sizeof(double) == 8);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, data + i, 8);
        write_u64(out, bits);
    }
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw std::runtime_error("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
        throw std::runtime_error("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

void write_tensor(std::ostream& out, const std::string& name, const Tensor& t) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, t.rank());
    for (std::size_t i = 0; i < t.rank(); ++i) write_u64(out, t.dim(i));
    write_f64(out, t.data(), t.numel());
}

std::pair<std::string, Tensor> read_tensor(std::istream& in) {
    const std::uint64_t name_len = read_u64(in);
    if (name_len > 4096) throw std::runtime_error("checkpoint: bad name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name_len)))
        throw std::runtime_error("checkpoint: truncated file");
    const std::uint64_t rank = read_u64(in);
    if (rank > 8) throw std::runtime_error("checkpoint: bad tensor rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(read_u64(in));
    Tensor t(shape);
    for (std::size_t i = 0; i < t.numel(); ++i) {
        std::uint64_t bits = read_u64(in);
        std::memcpy(&t[i], &bits, 8);
    }
    return {std::move(name), std::move(t)};
}

} // namespace

void save_checkpoint(const TrainState& st, const TrainConfig& tc,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path);

    out.write(kMagic, 4);
    write_u32(out, kVersion);
    const std::string cfg_text = config_to_text(st.model.cfg, tc);
    write_u64(out, cfg_text.size());
    out.write(cfg_text.data(), static_cast<std::streamsize>(cfg_text.size()));

    const auto& entries = st.model.params.entries();
    std::uint64_t count = entries.size() * 3 /* param + 2 moments */ + 2 /* P, meta */;
    if (st.data_standardized) count += 2;
    write_u64(out, count);

    for (std::size_t i = 0; i < entries.size(); ++i) {
        write_tensor(out, "param." + entries[i].first, entries[i].second->val);
        write_tensor(out, "adam.m." + entries[i].first, st.adam.m[i]);
        write_tensor(out, "adam.v." + entries[i].first, st.adam.v[i]);
    }
    write_tensor(out, "vast.P", st.graph.P);
    Tensor meta({4}, {static_cast<double>(st.adam.step),
                      static_cast<double>(st.graph.update_count), st.best_val,
                      st.trained ? 1.0 : 0.0});
    write_tensor(out, "state.meta", meta);
    if (st.data_standardized) {
        write_tensor(out, "data.mean", st.data_mean);
        write_tensor(out, "data.std", st.data_std);
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);

    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " +
                                 std::to_string(version));

    const std::uint64_t cfg_len = read_u64(in);
    if (cfg_len > (1u << 20)) throw std::runtime_error("checkpoint: bad config length");
    std::string cfg_text(cfg_len, '\0');
    if (!in.read(cfg_text.data(), static_cast<std::streamsize>(cfg_len)))
        throw std::runtime_error("checkpoint: truncated file");

    ModelConfig mc;
    TrainConfig tc;
    apply_config(parse_kv_text(cfg_text), mc, tc);

    LoadedCheckpoint lc{make_train_state(mc), tc};
    TrainState& st = lc.state;
    st.graph.beta = mc.beta;

    const std::uint64_t count = read_u64(in);
    const auto& entries = st.model.params.entries();
    for (std::uint64_t i = 0; i < count; ++i) {
        auto [name, t] = read_tensor(in);
        auto assign = [&](Tensor& dst) {
            if (!dst.same_shape(t))
                throw std::runtime_error("checkpoint: shape mismatch for " + name);
            dst = std::move(t);
        };
        if (name.rfind("param.", 0) == 0) {
            assign(st.model.params.get(name.substr(6))->val);
        } else if (name.rfind("adam.m.", 0) == 0 || name.rfind("adam.v.", 0) == 0) {
            const std::string pname = name.substr(7);
            std::size_t idx = entries.size();
            for (std::size_t e = 0; e < entries.size(); ++e)
                if (entries[e].first == pname) { idx = e; break; }
            if (idx == entries.size())
                throw std::runtime_error("checkpoint: unknown parameter " + pname);
            assign(name[5] == 'm' ? st.adam.m[idx] : st.adam.v[idx]);
        } else if (name == "vast.P") {
            assign(st.graph.P);
        } else if (name == "state.meta") {
            if (t.numel() != 4)
                throw std::runtime_error("checkpoint: bad state.meta");
            st.adam.step = static_cast<std::uint64_t>(t[0]);
            st.graph.update_count = static_cast<std::uint64_t>(t[1]);
            st.best_val = t[2];
            st.trained = t[3] != 0.0;
        } else if (name == "data.mean") {
            st.data_standardized = true;
            st.data_mean = std::move(t);
        } else if (name == "data.std") {
            st.data_standardized = true;
            st.data_std = std::move(t);
        } else {
            throw std::runtime_error("checkpoint: unknown tensor " + name);
        }
    }
    return lc;
}

} // namespace seqcast

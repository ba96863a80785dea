#include "atntopo/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace atntopo {

using nlohmann::json;

namespace {

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

std::uint16_t get_u16(std::string_view b, std::size_t at) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                      (static_cast<unsigned char>(b[at + 1]) << 8));
}

std::uint32_t get_u32(std::string_view b, std::size_t at) {
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(b[at + static_cast<std::size_t>(k)]);
    return v;
}

std::uint64_t get_u64(std::string_view b, std::size_t at) {
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(b[at + static_cast<std::size_t>(k)]);
    return v;
}

std::uint16_t checked_u16(std::size_t v, const char* what) {
    if (v > 0xffff) throw std::invalid_argument(std::string("container ") + what + " exceeds 65535");
    return static_cast<std::uint16_t>(v);
}

std::vector<bool> flags_from_json(const json& j, const char* key, std::size_t n) {
    if (!j.contains(key) || j.at(key).is_null()) return std::vector<bool>(n, false);
    std::vector<bool> out;
    for (const auto& v : j.at(key)) out.push_back(v.is_boolean() ? v.get<bool>() : v.get<int>() != 0);
    return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::runtime_error(context + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

int parse_label(std::string_view s, const std::string& context) {
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw std::runtime_error(context + ": label '" + std::string(s) + "' is not 0 or 1");
}

fs::path resolve(const fs::path& base_file, const std::string& ref) {
    fs::path p(ref);
    if (p.is_relative()) p = base_file.parent_path() / p;
    return p;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, end);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& fill, bool binary) {
    fs::path tmp = path;
    tmp += ".tmp";
    try {
        {
            std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write " + tmp.string());
            fill(out);
            out.flush();
            if (!out) throw std::runtime_error("write failed for " + tmp.string());
        }
        fs::rename(tmp, path);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
}

std::size_t container_byte_size(std::size_t layers, std::size_t heads, std::size_t n) {
    return kContainerHeaderBytes + 4 * layers * heads * n * n;
}

nlohmann::json meta_to_json(const TokenMeta& meta) {
    json j;
    j["tokens"] = meta.tokens;
    j["cls_index"] = meta.cls_index ? json(*meta.cls_index) : json(nullptr);
    j["sep_indices"] = meta.sep_indices;
    j["punct_flags"] = meta.punct_flags;
    j["comma_flags"] = meta.comma_flags;
    j["dot_flags"] = meta.dot_flags;
    j["first_index"] = meta.first_index;
    return j;
}

TokenMeta meta_from_json(const nlohmann::json& j) {
    TokenMeta m;
    m.tokens = j.at("tokens").get<std::vector<std::string>>();
    const std::size_t n = m.tokens.size();
    if (j.contains("cls_index") && !j.at("cls_index").is_null()) m.cls_index = j.at("cls_index").get<std::size_t>();
    if (j.contains("sep_indices")) m.sep_indices = j.at("sep_indices").get<std::vector<std::size_t>>();
    m.punct_flags = flags_from_json(j, "punct_flags", n);
    m.comma_flags = flags_from_json(j, "comma_flags", n);
    m.dot_flags = flags_from_json(j, "dot_flags", n);
    m.first_index = j.value("first_index", std::size_t{0});
    m.validate();
    return m;
}

std::string encode_container(const AttentionContainer& c) {
    const AttentionGrid& g = c.grid;
    const std::size_t n = g.tokens();
    if (g.maps.size() != g.layers * g.heads)
        throw std::invalid_argument("container: grid holds " + std::to_string(g.maps.size()) + " maps, expected " +
                                    std::to_string(g.layers * g.heads));
    std::string out;
    out.reserve(container_byte_size(g.layers, g.heads, n));
    out.append(kContainerMagic, 4);
    put_u16(out, kContainerVersion);
    put_u16(out, checked_u16(g.layers, "layer count"));
    put_u16(out, checked_u16(g.heads, "head count"));
    put_u16(out, checked_u16(n, "token count"));
    put_u16(out, 0);
    for (const AttentionMap& m : g.maps) {
        if (m.size() != n) throw std::invalid_argument("container: heads disagree on token count");
        for (double v : m.weights.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    return out;
}

nlohmann::json encode_manifest(const AttentionContainer& c) {
    json j = c.grid.maps.empty() ? meta_to_json(TokenMeta{}) : meta_to_json(c.grid.maps.front().meta);
    j["sentence_id"] = c.sentence_id;
    j["model"] = c.model;
    return j;
}

AttentionContainer decode_container(std::string_view bytes, const nlohmann::json& manifest, double row_tol) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kContainerMagic, 4) != 0)
        throw std::runtime_error("bad container magic (expected \"ATNB\")");
    if (bytes.size() < kContainerHeaderBytes)
        throw std::runtime_error("truncated container header: expected " + std::to_string(kContainerHeaderBytes) +
                                 " bytes, got " + std::to_string(bytes.size()));
    const std::uint16_t version = get_u16(bytes, 4);
    if (version != kContainerVersion)
        throw std::runtime_error("unsupported container version " + std::to_string(version));
    const std::size_t layers = get_u16(bytes, 6), heads = get_u16(bytes, 8), n = get_u16(bytes, 10);
    const std::size_t expected = container_byte_size(layers, heads, n);
    if (bytes.size() < expected)
        throw std::runtime_error("truncated container payload: expected " + std::to_string(expected) + " bytes, got " +
                                 std::to_string(bytes.size()));
    if (bytes.size() > expected)
        throw std::runtime_error("trailing bytes in container: expected " + std::to_string(expected) + " bytes, got " +
                                 std::to_string(bytes.size()));

    AttentionContainer c;
    c.sentence_id = manifest.value("sentence_id", std::string{});
    c.model = manifest.value("model", std::string{});
    const TokenMeta meta = meta_from_json(manifest);
    if (meta.size() != n)
        throw std::runtime_error("manifest lists " + std::to_string(meta.size()) + " tokens but container has n=" +
                                 std::to_string(n));

    c.grid.layers = layers;
    c.grid.heads = heads;
    c.grid.maps.reserve(layers * heads);
    std::size_t at = kContainerHeaderBytes;
    for (std::size_t l = 0; l < layers; ++l)
        for (std::size_t h = 0; h < heads; ++h) {
            AttentionMap m{SquareMatrix(n), meta};
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j, at += 4) {
                    const float v = std::bit_cast<float>(get_u32(bytes, at));
                    if (std::isnan(v))
                        throw std::runtime_error("NaN in container payload at " +
                                                 to_string(HeadId{static_cast<int>(l), static_cast<int>(h)}) +
                                                 ", row " + std::to_string(i) + ", col " + std::to_string(j));
                    m.weights(i, j) = static_cast<double>(v);
                }
            for (const std::string& p : check_attention(m, row_tol))
                c.warnings.push_back(to_string(HeadId{static_cast<int>(l), static_cast<int>(h)}) + ": " + p);
            c.grid.maps.push_back(std::move(m));
        }
    return c;
}

fs::path manifest_path(const fs::path& container) {
    fs::path p = container;
    p.replace_extension(".json");
    return p;
}

void write_container(const fs::path& path, const AttentionContainer& c) {
    const std::string bytes = encode_container(c);
    const std::string manifest = encode_manifest(c).dump(2) + "\n";
    atomic_write(path, [&](std::ostream& os) { os.write(bytes.data(), static_cast<std::streamsize>(bytes.size())); },
                 true);
    atomic_write(manifest_path(path), [&](std::ostream& os) { os << manifest; });
}

AttentionContainer read_container(const fs::path& path, double row_tol) {
    const std::string bytes = read_file(path);
    const fs::path mp = manifest_path(path);
    json manifest;
    try {
        manifest = json::parse(read_file(mp));
    } catch (const json::exception& e) {
        throw std::runtime_error("invalid manifest " + mp.string() + ": " + e.what());
    }
    try {
        return decode_container(bytes, manifest, row_tol);
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

std::vector<SentenceRecord> read_sentences(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<SentenceRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("id\t", 0) == 0) continue;
        const std::string ctx = path.string() + ":" + std::to_string(lineno);
        const auto cols = split_tabs(line);
        if (cols.size() != 4)
            throw std::runtime_error(ctx + ": expected 4 tab-separated columns, got " + std::to_string(cols.size()));
        SentenceRecord r{cols[0], parse_label(cols[1], ctx), cols[2], resolve(path, cols[3])};
        if (!fs::exists(r.attention)) throw std::runtime_error(ctx + ": attention file " + r.attention.string() + " not found");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<PairRecord> read_pairs(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<PairRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::string ctx = path.string() + ":" + std::to_string(lineno);
        try {
            const json j = json::parse(line);
            PairRecord r;
            r.sentence_good = j.at("sentence_good").get<std::string>();
            r.sentence_bad = j.at("sentence_bad").get<std::string>();
            r.phenomenon = j.value("phenomenon", std::string{});
            r.pair_type = j.value("pair_type", std::string{});
            r.good_attention = resolve(path, j.at("good_attention").get<std::string>());
            r.bad_attention = resolve(path, j.at("bad_attention").get<std::string>());
            for (const fs::path& p : {r.good_attention, r.bad_attention})
                if (!fs::exists(p)) throw std::runtime_error("attention file " + p.string() + " not found");
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw std::runtime_error(ctx + ": " + e.what());
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(ctx + ": " + e.what());
        }
    }
    return out;
}

MinimalPair load_pair(const PairRecord& r) {
    MinimalPair p;
    p.a = {r.sentence_good, read_container(r.good_attention).grid};
    p.b = {r.sentence_bad, read_container(r.bad_attention).grid};
    p.phenomenon = r.phenomenon;
    p.pair_type = r.pair_type;
    p.acceptable = Choice::A;
    return p;
}

void write_feature_table(const fs::path& path, const std::vector<FeatureRow>& rows) {
    const std::vector<std::string>* names = rows.empty() ? nullptr : &rows.front().features.names;
    for (const FeatureRow& r : rows)
        if (r.features.names != *names)
            throw std::invalid_argument("feature table: row '" + r.id + "' has a different feature schema");
    atomic_write(path, [&](std::ostream& os) {
        os << "#schema=" << (rows.empty() ? std::string(kFeatureSchema) : rows.front().features.schema_version) << "\n";
        os << "id\tlabel";
        if (names)
            for (const auto& n : *names) os << '\t' << n;
        os << "\n";
        for (const FeatureRow& r : rows) {
            os << r.id << '\t' << r.label;
            for (double v : r.features.values) os << '\t' << format_double(v);
            os << "\n";
        }
    });
}

LabeledDataset read_feature_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("#schema=", 0) != 0)
        throw std::runtime_error(path.string() + ": missing #schema line");
    const std::string schema = strip_cr(line).substr(8);
    if (schema != kFeatureSchema)
        throw std::runtime_error(path.string() + ": unsupported feature schema '" + schema + "'");
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header");
    auto header = split_tabs(strip_cr(line));
    if (header.size() < 2 || header[0] != "id" || header[1] != "label")
        throw std::runtime_error(path.string() + ": header must start with id, label");

    LabeledDataset ds;
    ds.feature_names.assign(header.begin() + 2, header.end());
    const std::size_t d = ds.feature_names.size();
    std::vector<double> values;
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::string ctx = path.string() + ":" + std::to_string(lineno);
        const auto cols = split_tabs(line);
        if (cols.size() != d + 2)
            throw std::runtime_error(ctx + ": expected " + std::to_string(d + 2) + " columns, got " +
                                     std::to_string(cols.size()));
        ds.ids.push_back(cols[0]);
        ds.labels.push_back(parse_label(cols[1], ctx));
        for (std::size_t k = 0; k < d; ++k) values.push_back(parse_double(cols[k + 2], ctx));
    }
    ds.x.resize(static_cast<Eigen::Index>(ds.labels.size()), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < ds.labels.size(); ++r)
        for (std::size_t k = 0; k < d; ++k)
            ds.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = values[r * d + k];
    return ds;
}

namespace {

void put_doubles(std::string& out, const double* p, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) put_u64(out, std::bit_cast<std::uint64_t>(p[k]));
}

class Reader {
public:
    explicit Reader(std::string_view b) : b_(b) {}
    void need(std::size_t bytes) const {
        if (at_ + bytes > b_.size()) throw std::runtime_error("truncated model file");
    }
    std::string_view take(std::size_t bytes) {
        need(bytes);
        auto s = b_.substr(at_, bytes);
        at_ += bytes;
        return s;
    }
    std::uint16_t u16() {
        need(2);
        at_ += 2;
        return get_u16(b_, at_ - 2);
    }
    std::uint32_t u32() {
        need(4);
        at_ += 4;
        return get_u32(b_, at_ - 4);
    }
    void doubles(double* p, std::size_t count) {
        need(8 * count);
        for (std::size_t k = 0; k < count; ++k, at_ += 8) p[k] = std::bit_cast<double>(get_u64(b_, at_));
    }
    bool done() const { return at_ == b_.size(); }

private:
    std::string_view b_;
    std::size_t at_ = 0;
};

}  // namespace

void write_model(const fs::path& path, const SavedModel& m) {
    const Pipeline& p = m.pipeline;
    const auto d = static_cast<std::size_t>(p.standardizer.mean.size());
    json h;
    h["d"] = d;
    h["feature_names"] = m.feature_names;
    h["n_comp"] = p.pca ? json(p.pca->n_components()) : json(nullptr);
    h["active_mask"] = p.pca ? json(p.pca->active_mask) : json::array();
    h["explained_variance"] = p.pca ? json(p.pca->explained_variance) : json::array();
    h["params"] = {{"n_comp", p.params.n_comp ? json(*p.params.n_comp) : json(nullptr)},
                   {"active_components", p.params.active_components},
                   {"reg", p.params.logreg.reg},
                   {"penalty", penalty_name(p.params.logreg.penalty)},
                   {"max_iter", p.params.logreg.max_iter},
                   {"tol", p.params.logreg.tol}};
    h["iterations"] = p.model.iterations;
    h["converged"] = p.model.converged;
    const std::string header = h.dump();

    std::string out(kModelMagic, 4);
    put_u16(out, kModelVersion);
    put_u32(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    put_doubles(out, p.standardizer.mean.data(), d);
    put_doubles(out, p.standardizer.scale.data(), d);
    if (p.pca) {
        put_doubles(out, p.pca->mean.data(), d);
        const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> comp = p.pca->components;
        put_doubles(out, comp.data(), static_cast<std::size_t>(comp.size()));
    }
    put_doubles(out, p.model.weights.data(), static_cast<std::size_t>(p.model.weights.size()));
    put_doubles(out, &p.model.bias, 1);
    atomic_write(path, [&](std::ostream& os) { os.write(out.data(), static_cast<std::streamsize>(out.size())); }, true);
}

SavedModel read_model(const fs::path& path) {
    const std::string bytes = read_file(path);
    Reader r(bytes);
    if (r.take(4) != std::string_view(kModelMagic, 4)) throw std::runtime_error(path.string() + ": bad model magic");
    const std::uint16_t version = r.u16();
    if (version != kModelVersion)
        throw std::runtime_error(path.string() + ": unsupported model version " + std::to_string(version));
    const json h = json::parse(r.take(r.u32()));

    SavedModel m;
    Pipeline& p = m.pipeline;
    const auto d = h.at("d").get<std::size_t>();
    const auto dd = static_cast<Eigen::Index>(d);
    m.feature_names = h.at("feature_names").get<std::vector<std::string>>();
    const json& pj = h.at("params");
    if (!pj.at("n_comp").is_null()) p.params.n_comp = pj.at("n_comp").get<std::size_t>();
    p.params.active_components = pj.at("active_components").get<std::vector<std::size_t>>();
    p.params.logreg.reg = pj.at("reg").get<double>();
    p.params.logreg.penalty = parse_penalty(pj.at("penalty").get<std::string>());
    p.params.logreg.max_iter = pj.at("max_iter").get<std::size_t>();
    p.params.logreg.tol = pj.at("tol").get<double>();

    p.standardizer.mean.resize(dd);
    p.standardizer.scale.resize(dd);
    r.doubles(p.standardizer.mean.data(), d);
    r.doubles(p.standardizer.scale.data(), d);
    std::size_t k = d;
    if (!h.at("n_comp").is_null()) {
        const auto nc = h.at("n_comp").get<std::size_t>();
        PcaModel pca;
        pca.mean.resize(dd);
        r.doubles(pca.mean.data(), d);
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> comp(static_cast<Eigen::Index>(nc), dd);
        r.doubles(comp.data(), nc * d);
        pca.components = comp;
        pca.active_mask = h.at("active_mask").get<std::vector<bool>>();
        pca.explained_variance = h.at("explained_variance").get<std::vector<double>>();
        p.pca = std::move(pca);
        k = nc;
    }
    p.model.weights.resize(static_cast<Eigen::Index>(k));
    r.doubles(p.model.weights.data(), k);
    r.doubles(&p.model.bias, 1);
    p.model.reg = p.params.logreg.reg;
    p.model.penalty = p.params.logreg.penalty;
    p.model.iterations = h.value("iterations", std::size_t{0});
    p.model.converged = h.value("converged", false);
    if (!r.done()) throw std::runtime_error(path.string() + ": trailing bytes in model file");
    return m;
}

const SelectedConfig& HeadManifest::for_phenomenon(std::string_view phenomenon) const {
    for (const auto& c : configs)
        if (c.phenomenon == phenomenon) return c;
    for (const auto& c : configs)
        if (c.phenomenon.empty()) return c;
    throw std::out_of_range("head manifest has no configuration for phenomenon '" + std::string(phenomenon) + "'");
}

nlohmann::json head_manifest_to_json(const HeadManifest& m) {
    json j;
    j["format"] = kHeadManifestFormat;
    j["mode"] = mode_name(m.mode);
    j["seed"] = m.seed;
    j["beam_cap"] = m.beam_cap;
    j["configs"] = json::array();
    for (const auto& c : m.configs) {
        json members = json::array();
        for (const Candidate& cand : c.config.members)
            members.push_back({{"layer", cand.head.layer}, {"head", cand.head.head}, {"rule", rule_name(cand.rule)}});
        j["configs"].push_back(
            {{"phenomenon", c.phenomenon}, {"members", members}, {"selection_accuracy", c.selection_accuracy}});
    }
    return j;
}

HeadManifest head_manifest_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != kHeadManifestFormat)
        throw std::runtime_error("head manifest: expected format " + std::string(kHeadManifestFormat));
    HeadManifest m;
    m.mode = parse_mode(j.at("mode").get<std::string>());
    m.seed = j.value("seed", std::uint64_t{0});
    m.beam_cap = j.value("beam_cap", std::size_t{40});
    for (const auto& cj : j.at("configs")) {
        SelectedConfig c;
        c.phenomenon = cj.value("phenomenon", std::string{});
        c.selection_accuracy = cj.value("selection_accuracy", 0.0);
        for (const auto& mj : cj.at("members"))
            c.config.members.push_back(
                {HeadId{mj.at("layer").get<int>(), mj.at("head").get<int>()}, parse_rule(mj.at("rule").get<std::string>())});
        c.config.mode = m.mode;
        c.config.validate();
        m.configs.push_back(std::move(c));
    }
    return m;
}

}  // namespace atntopo

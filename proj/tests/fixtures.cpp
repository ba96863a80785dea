#include "fixtures.hpp"

#include <atomic>
#include <fstream>

#include "oracles.hpp"

namespace fixture {

TempDir::TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("atntopo_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

atntopo::AttentionContainer uniform_container(const atntopo::SquareMatrix& w, std::size_t layers, std::size_t heads,
                                              std::string id) {
    atntopo::AttentionContainer c;
    c.sentence_id = std::move(id);
    c.model = "synthetic";
    c.grid.layers = layers;
    c.grid.heads = heads;
    for (std::size_t k = 0; k < layers * heads; ++k) c.grid.maps.push_back({w, atntopo::TokenMeta::plain(w.size())});
    return c;
}

atntopo::AttentionContainer random_container(std::size_t layers, std::size_t heads, std::size_t n,
                                             std::mt19937_64& rng) {
    atntopo::AttentionContainer c;
    c.sentence_id = "r" + std::to_string(rng() % 1000);
    c.model = "synthetic";
    c.grid.layers = layers;
    c.grid.heads = heads;
    for (std::size_t k = 0; k < layers * heads; ++k)
        c.grid.maps.push_back({oracle::random_attention(n, rng), atntopo::TokenMeta::plain(n)});
    return c;
}

namespace {

atntopo::SquareMatrix normalized(atntopo::SquareMatrix m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        double total = 0.0;
        for (double v : m.row(i)) total += v;
        for (std::size_t j = 0; j < m.size(); ++j) m(i, j) /= total;
    }
    return m;
}

}  // namespace

atntopo::SquareMatrix chain_attention(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> jitter(0.0, 0.05);
    atntopo::SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t gap = i > j ? i - j : j - i;
            m(i, j) = (gap == 1 ? 1.0 : 0.02) + jitter(rng);
        }
    return normalized(m);
}

atntopo::SquareMatrix star_attention(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> jitter(0.0, 0.05);
    atntopo::SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = (j == 0 ? 1.0 : 0.02) + jitter(rng);
    return normalized(m);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

}  // namespace fixture

#pragma once

// Temporary directories and container builders shared by the file-level tests.

#include <filesystem>
#include <random>
#include <string>

#include "atntopo/io.hpp"

namespace fixture {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

/// Container whose every head holds the given weights.
atntopo::AttentionContainer uniform_container(const atntopo::SquareMatrix& w, std::size_t layers = 1,
                                              std::size_t heads = 1, std::string id = "s");

/// Random row-stochastic container with plain token metadata.
atntopo::AttentionContainer random_container(std::size_t layers, std::size_t heads, std::size_t n,
                                             std::mt19937_64& rng);

/// Chain-like attention (each token attends to its neighbours).
atntopo::SquareMatrix chain_attention(std::size_t n, std::mt19937_64& rng);
/// Star-like attention (every token attends to the first).
atntopo::SquareMatrix star_attention(std::size_t n, std::mt19937_64& rng);

void write_text(const fs::path& path, const std::string& text);

}  // namespace fixture

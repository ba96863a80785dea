#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "atntopo/classify.hpp"
#include "atntopo/cli.hpp"
#include "atntopo/features.hpp"
#include "atntopo/graph.hpp"
#include "atntopo/io.hpp"
#include "atntopo/persistence.hpp"
#include "atntopo/rtd.hpp"

namespace py = pybind11;
using namespace atntopo;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

SquareMatrix to_matrix(const Array& a) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw std::invalid_argument("expected a square 2-D array");
    const auto n = static_cast<std::size_t>(a.shape(0));
    return SquareMatrix(n, std::vector<double>(a.data(), a.data() + n * n));
}

Array to_array(const SquareMatrix& m) {
    Array out({m.size(), m.size()});
    std::copy(m.values().begin(), m.values().end(), out.mutable_data());
    return out;
}

std::vector<std::pair<double, double>> bars(const Barcode& b) {
    std::vector<std::pair<double, double>> out;
    for (const Bar& bar : b.bars) out.emplace_back(bar.birth, bar.death);
    return out;
}

DistanceMatrix distance(const Array& a) { return DistanceMatrix(to_matrix(a)); }

TokenMeta meta_or_plain(const std::optional<py::dict>& meta, std::size_t n) {
    if (!meta) return TokenMeta::plain(n);
    py::module_ json = py::module_::import("json");
    return meta_from_json(nlohmann::json::parse(py::str(json.attr("dumps")(*meta)).cast<std::string>()));
}

py::dict meta_dict(const TokenMeta& m) {
    py::module_ json = py::module_::import("json");
    return json.attr("loads")(meta_to_json(m).dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Topological features of attention maps";

    m.def("symmetrize_distance", [](const Array& a) { return to_array(symmetrize_distance(to_matrix(a)).matrix()); },
          "1 - max(A, A^T) with zero diagonal");
    m.def("h0_barcode", [](const Array& d) { return bars(h0_barcode(distance(d))); });
    m.def("h1_barcode", [](const Array& d) { return bars(h1_barcode(distance(d))); });
    m.def("h0_sum", [](const Array& d) { return h0_sum(distance(d)); });
    m.def("h0_mean", [](const Array& d) { return h0_mean(distance(d)); });
    m.def("rtd", [](const Array& da, const Array& db) { return rtd(distance(da), distance(db)); },
          "Total H1 bar length of the union graph of two distance matrices");
    m.def(
        "head_features",
        [](const Array& a, const std::optional<py::dict>& meta, std::vector<double> thresholds, bool drop_special) {
            FeatureConfig cfg;
            if (!thresholds.empty()) cfg.thresholds = std::move(thresholds);
            cfg.drop_special = drop_special;
            const SquareMatrix w = to_matrix(a);
            const FeatureVector fv = head_features(AttentionMap{w, meta_or_plain(meta, w.size())}, cfg);
            return std::make_pair(fv.names, fv.values);
        },
        py::arg("attention"), py::arg("meta") = py::none(), py::arg("thresholds") = std::vector<double>{},
        py::arg("drop_special") = false);
    m.def("read_container", [](const std::filesystem::path& path) {
        const AttentionContainer c = read_container(path);
        const std::size_t n = c.grid.tokens();
        Array att({c.grid.layers, c.grid.heads, n, n});
        double* out = att.mutable_data();
        for (const AttentionMap& mp : c.grid.maps) out = std::copy(mp.weights.values().begin(), mp.weights.values().end(), out);
        py::dict d;
        d["sentence_id"] = c.sentence_id;
        d["model"] = c.model;
        d["attention"] = att;
        d["meta"] = c.grid.maps.empty() ? py::dict() : meta_dict(c.grid.maps.front().meta);
        d["warnings"] = c.warnings;
        return d;
    });
    m.def(
        "write_container",
        [](const std::filesystem::path& path, const py::array_t<double, py::array::c_style | py::array::forcecast>& att,
           const std::optional<py::dict>& meta, const std::string& sentence_id, const std::string& model) {
            if (att.ndim() != 4 || att.shape(2) != att.shape(3))
                throw std::invalid_argument("attention must have shape (layers, heads, n, n)");
            const auto n = static_cast<std::size_t>(att.shape(2));
            AttentionContainer c;
            c.sentence_id = sentence_id;
            c.model = model;
            c.grid.layers = static_cast<std::size_t>(att.shape(0));
            c.grid.heads = static_cast<std::size_t>(att.shape(1));
            const TokenMeta tm = meta_or_plain(meta, n);
            const double* p = att.data();
            for (std::size_t k = 0; k < c.grid.layers * c.grid.heads; ++k, p += n * n)
                c.grid.maps.push_back({SquareMatrix(n, std::vector<double>(p, p + n * n)), tm});
            write_container(path, c);
        },
        py::arg("path"), py::arg("attention"), py::arg("meta") = py::none(), py::arg("sentence_id") = "",
        py::arg("model") = "");
    m.def("mcc", [](const std::vector<int>& pred, const std::vector<int>& labels) { return mcc(pred, labels); });
    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    });
}

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <utility>
#include <vector>

#include "somsam/dataio.hpp"
#include "somsam/error.hpp"
#include "somsam/eval.hpp"
#include "somsam/pq.hpp"
#include "somsam/sam.hpp"
#include "somsam/som.hpp"

namespace py = pybind11;
using namespace somsam;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

RowsView rows_of(const FloatArray& a) {
  if (a.ndim() != 2) throw ContractError("expected a 2-D array of samples");
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return {a.data(), static_cast<std::size_t>(a.shape(0)), cols, cols};
}

std::span<const float> vector_of(const FloatArray& a) {
  if (a.ndim() != 1) throw ContractError("expected a 1-D vector");
  return {a.data(), static_cast<std::size_t>(a.shape(0))};
}

FloatArray matrix_copy(std::span<const float> values, std::size_t rows, std::size_t cols) {
  FloatArray out({rows, cols});
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

FeatureSet feature_set_from(const FloatArray& values, const std::vector<ClassId>& labels) {
  const RowsView rows = rows_of(values);
  if (rows.rows != labels.size()) throw ShapeError("label count", rows.rows, labels.size());
  FeatureSet set{static_cast<std::uint32_t>(rows.cols), labels,
                 std::vector<float>(values.data(), values.data() + values.size())};
  set.validate();
  return set;
}

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
  return {reinterpret_cast<const char*>(v.data()), v.size()};
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

}  // namespace

PYBIND11_MODULE(_somsam, m) {
  m.doc() = "SOM product quantizer feeding a sparse associative memory classifier";

  static py::exception<Error> base_error(m, "SomsamError");
  static py::exception<ShapeError> shape_error(m, "ShapeError", base_error.ptr());
  static py::exception<FormatError> format_error(m, "FormatError", base_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ShapeError& e) {
      py::set_error(shape_error, e.what());
    } catch (const FormatError& e) {
      py::set_error(format_error, e.what());
    } catch (const Error& e) {
      py::set_error(base_error, e.what());
    }
  });

  py::enum_<Decay>(m, "Decay")
      .value("Linear", Decay::Linear)
      .value("Exponential", Decay::Exponential);
  py::enum_<ClassifierMode>(m, "ClassifierMode")
      .value("Binary", ClassifierMode::Binary)
      .value("Integer", ClassifierMode::Integer);
  py::enum_<ClassOrder>(m, "ClassOrder")
      .value("LabelAscending", ClassOrder::LabelAscending)
      .value("Seeded", ClassOrder::Seeded);

  // --- som ---------------------------------------------------------------
  py::class_<GridTopology>(m, "GridTopology")
      .def(py::init<std::uint32_t, std::uint32_t>(), py::arg("rows"), py::arg("cols"))
      .def_readwrite("rows", &GridTopology::rows)
      .def_readwrite("cols", &GridTopology::cols)
      .def_property_readonly("size", &GridTopology::size)
      .def_static("near_square", &GridTopology::near_square, py::arg("n"))
      .def("__eq__", &GridTopology::operator==)
      .def("__repr__", [](const GridTopology& g) {
        return "GridTopology(" + std::to_string(g.rows) + ", " + std::to_string(g.cols) + ")";
      });

  py::class_<SomTrainConfig>(m, "SomTrainConfig")
      .def(py::init([](std::uint32_t epochs, double alpha, std::optional<double> theta, Decay decay,
                       std::uint64_t seed) {
             SomTrainConfig c{epochs, alpha, theta, decay, seed};
             c.validate();
             return c;
           }),
           py::arg("epochs") = 10, py::arg("alpha") = 0.1, py::arg("theta") = py::none(),
           py::arg("decay") = Decay::Linear, py::arg("seed") = 0)
      .def_readwrite("epochs", &SomTrainConfig::epochs)
      .def_readwrite("alpha", &SomTrainConfig::alpha)
      .def_readwrite("theta", &SomTrainConfig::theta)
      .def_readwrite("decay", &SomTrainConfig::decay)
      .def_readwrite("seed", &SomTrainConfig::seed)
      .def("resolved", &SomTrainConfig::resolved, py::arg("grid"));

  m.def("grid_distance", &grid_distance, py::arg("grid"), py::arg("i"), py::arg("j"));
  m.def("decay_factor", &decay_factor, py::arg("config"), py::arg("t"));
  m.def("neighborhood", &neighborhood, py::arg("config"), py::arg("grid"), py::arg("t"),
        py::arg("i_star"), py::arg("i"));

  py::class_<Som>(m, "Som")
      .def(py::init([](GridTopology grid, const FloatArray& weights) {
             const RowsView rows = rows_of(weights);
             return Som(rows.cols, grid,
                        std::vector<float>(weights.data(), weights.data() + weights.size()));
           }),
           py::arg("grid"), py::arg("weights"))
      .def_property_readonly("dim", &Som::dim)
      .def_property_readonly("size", &Som::size)
      .def_property_readonly("grid", &Som::grid)
      .def_property_readonly("weights",
                             [](const Som& s) { return matrix_copy(s.weights(), s.size(), s.dim()); })
      .def("bmu", [](const Som& s, const FloatArray& x) { return s.bmu(vector_of(x)); }, py::arg("x"))
      .def("quantize_onehot",
           [](const Som& s, const FloatArray& x) { return s.quantize_onehot(vector_of(x)); },
           py::arg("x"))
      .def("__eq__", &Som::operator==);

  m.def("init_som",
        [](const SomTrainConfig& c, const GridTopology& g, const FloatArray& data) {
          const RowsView rows = rows_of(data);
          return init_som(c, rows.cols, g, rows);
        },
        py::arg("config"), py::arg("grid"), py::arg("data"));
  m.def("train_som",
        [](Som som, const SomTrainConfig& c, const FloatArray& data) {
          train_som(som, c, rows_of(data));
          return som;
        },
        py::arg("som"), py::arg("config"), py::arg("data"),
        "Returns a trained copy; the argument is left unchanged.");
  m.def("fit_som",
        [](const SomTrainConfig& c, const GridTopology& g, const FloatArray& data) {
          return fit_som(c, g, rows_of(data));
        },
        py::arg("config"), py::arg("grid"), py::arg("data"));
  m.def("quantization_error",
        [](const Som& s, const FloatArray& data) { return quantization_error(s, rows_of(data)); },
        py::arg("som"), py::arg("data"));

  // --- pq ----------------------------------------------------------------
  py::class_<SparseCode>(m, "SparseCode")
      .def(py::init<std::uint32_t, std::vector<std::uint32_t>>(), py::arg("n_per_som"),
           py::arg("indices"))
      .def_readonly("n_per_som", &SparseCode::n_per_som)
      .def_readonly("indices", &SparseCode::indices)
      .def_property_readonly("k", &SparseCode::k)
      .def("dense", &SparseCode::dense)
      .def("__eq__", &SparseCode::operator==);

  m.def("split",
        [](const FloatArray& x, std::size_t k) {
          std::vector<std::vector<float>> out;
          for (auto part : split(vector_of(x), k)) out.emplace_back(part.begin(), part.end());
          return out;
        },
        py::arg("x"), py::arg("k"));
  m.def("som_seed", &som_seed, py::arg("seed"), py::arg("j"));

  py::class_<ProductQuantizer>(m, "ProductQuantizer")
      .def_property_readonly("k", &ProductQuantizer::k)
      .def_property_readonly("subdim", &ProductQuantizer::subdim)
      .def_property_readonly("n_per_som", &ProductQuantizer::n_per_som)
      .def_property_readonly("input_dim", &ProductQuantizer::input_dim)
      .def_property_readonly("grid", &ProductQuantizer::grid)
      .def_property_readonly("config", &ProductQuantizer::config)
      .def_property_readonly("soms", &ProductQuantizer::soms)
      .def("quantize", [](const ProductQuantizer& pq, const FloatArray& x) {
        return pq.quantize(vector_of(x));
      }, py::arg("x"))
      .def("quantize_batch",
           [](const ProductQuantizer& pq, const FloatArray& data) {
             const RowsView rows = rows_of(data);
             py::array_t<std::uint32_t> out({rows.rows, pq.k()});
             auto* dst = out.mutable_data();
             for (std::size_t i = 0; i < rows.rows; ++i) {
               const auto code = pq.quantize(rows.row(i));
               std::copy(code.indices.begin(), code.indices.end(), dst + i * pq.k());
             }
             return out;
           },
           py::arg("data"), "Code indices of every row, shape (rows, k).")
      .def("__eq__", &ProductQuantizer::operator==);

  m.def("train_pq",
        [](const SomTrainConfig& c, std::size_t k, std::uint32_t n, const FloatArray& data) {
          return train_pq(c, k, n, rows_of(data));
        },
        py::arg("config"), py::arg("k"), py::arg("n_per_som"), py::arg("data"));

  // --- sam ---------------------------------------------------------------
  py::class_<ClassScore>(m, "ClassScore")
      .def_readonly("label", &ClassScore::label)
      .def_readonly("score", &ClassScore::score)
      .def("__iter__", [](const ClassScore& s) {
        return py::iter(py::make_tuple(s.label, s.score));
      });

  py::class_<AssociativeClassifier>(m, "AssociativeClassifier")
      .def(py::init<ClassifierMode, std::size_t, std::size_t>(), py::arg("mode"), py::arg("k"),
           py::arg("n_per_som"))
      .def_property_readonly("mode", &AssociativeClassifier::mode)
      .def_property_readonly("k", &AssociativeClassifier::k)
      .def_property_readonly("n_per_som", &AssociativeClassifier::n_per_som)
      .def_property_readonly("num_classes", &AssociativeClassifier::num_classes)
      .def_property_readonly("samples_per_class",
                             [](const AssociativeClassifier& c) {
                               auto s = c.samples_per_class();
                               return std::vector<std::uint64_t>(s.begin(), s.end());
                             })
      .def("learn", &AssociativeClassifier::learn, py::arg("code"), py::arg("label"))
      .def("learn_batch",
           [](AssociativeClassifier& c, const std::vector<std::pair<SparseCode, ClassId>>& pairs) {
             std::vector<LabeledCode> labeled;
             labeled.reserve(pairs.size());
             for (const auto& [code, label] : pairs) labeled.push_back({code, label});
             c.learn_batch(labeled);
           },
           py::arg("pairs"))
      .def("cell", &AssociativeClassifier::cell, py::arg("row"), py::arg("column"))
      .def("row_sum", &AssociativeClassifier::row_sum, py::arg("row"))
      .def("scores", &AssociativeClassifier::scores, py::arg("code"))
      .def("predict", &AssociativeClassifier::predict, py::arg("code"))
      .def("top_k", &AssociativeClassifier::top_k, py::arg("code"), py::arg("count"))
      .def("__eq__", &AssociativeClassifier::operator==);
  m.def("merge", &merge, py::arg("a"), py::arg("b"));

  // --- dataio ------------------------------------------------------------
  py::class_<FeatureSet>(m, "FeatureSet")
      .def(py::init(&feature_set_from), py::arg("values"), py::arg("labels"))
      .def_readonly("dim", &FeatureSet::dim)
      .def_readonly("labels", &FeatureSet::labels)
      .def_property_readonly("values",
                             [](const FeatureSet& s) { return matrix_copy(s.values, s.size(), s.dim); })
      .def("__len__", &FeatureSet::size)
      .def("distinct_labels", &FeatureSet::distinct_labels)
      .def("__eq__", &FeatureSet::operator==);

  m.def("read_features", py::overload_cast<const std::filesystem::path&>(&read_features),
        py::arg("path"));
  m.def("write_features",
        py::overload_cast<const FeatureSet&, const std::filesystem::path&>(&write_features),
        py::arg("set"), py::arg("path"));
  m.def("encode_features", [](const FeatureSet& s) { return to_bytes(encode_features(s)); },
        py::arg("set"));
  m.def("decode_features", [](const py::bytes& b) { return decode_features(from_bytes(b)); },
        py::arg("data"));
  m.def("l2_normalize",
        [](FeatureSet s) {
          auto r = l2_normalize(std::move(s));
          return py::make_tuple(std::move(r.set), r.skipped_zero);
        },
        py::arg("set"), "Returns (normalized set, number of zero vectors skipped).");

  py::class_<SyntheticSpec>(m, "SyntheticSpec")
      .def(py::init<std::uint32_t, std::uint32_t, std::uint32_t, double, std::uint64_t>(),
           py::arg("num_classes") = 10, py::arg("dim") = 64, py::arg("samples_per_class") = 50,
           py::arg("cluster_spread") = 0.05, py::arg("seed") = 0)
      .def_readwrite("num_classes", &SyntheticSpec::num_classes)
      .def_readwrite("dim", &SyntheticSpec::dim)
      .def_readwrite("samples_per_class", &SyntheticSpec::samples_per_class)
      .def_readwrite("cluster_spread", &SyntheticSpec::cluster_spread)
      .def_readwrite("seed", &SyntheticSpec::seed);
  m.def("generate_synthetic", &generate_synthetic, py::arg("spec"));
  m.def("split_per_class", &split_per_class, py::arg("set"), py::arg("train_per_class"));

  py::class_<Model>(m, "Model")
      .def(py::init<ProductQuantizer, AssociativeClassifier>(), py::arg("quantizer"),
           py::arg("classifier"))
      .def_readwrite("quantizer", &Model::quantizer)
      .def_readwrite("classifier", &Model::classifier)
      .def("predict",
           [](const Model& model, const FloatArray& x) {
             return model.classifier.predict(model.quantizer.quantize(vector_of(x)));
           },
           py::arg("x"))
      .def("__eq__", &Model::operator==);
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def("encode_model", [](const Model& model) { return to_bytes(encode_model(model)); },
        py::arg("model"));
  m.def("decode_model", [](const py::bytes& b) { return decode_model(from_bytes(b)); },
        py::arg("data"));

  // --- evaluation --------------------------------------------------------
  py::class_<TrainOptions>(m, "TrainOptions")
      .def(py::init([](SomTrainConfig som, std::uint32_t k, std::uint32_t n, ClassifierMode mode) {
             return TrainOptions{std::move(som), k, n, mode};
           }),
           py::arg("som") = SomTrainConfig{}, py::arg("k") = 8, py::arg("n_per_som") = 16,
           py::arg("mode") = ClassifierMode::Binary)
      .def_readwrite("som", &TrainOptions::som)
      .def_readwrite("k", &TrainOptions::k)
      .def_readwrite("n_per_som", &TrainOptions::n_per_som)
      .def_readwrite("mode", &TrainOptions::mode);

  m.def("train_model",
        [](const FeatureSet& train, const TrainOptions& opt) {
          TrainResult r = train_model(train, opt);
          return py::make_tuple(std::move(r.model), r.quantizer_ms, r.classifier_ms);
        },
        py::arg("train"), py::arg("options"),
        "Returns (model, quantizer_ms, classifier_ms).");

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("ks", &EvalReport::ks)
      .def_readonly("topk_accuracy", &EvalReport::topk_accuracy)
      .def_readonly("per_class_accuracy", &EvalReport::per_class_accuracy)
      .def_readonly("class_present", &EvalReport::class_present)
      .def_readonly("samples", &EvalReport::samples)
      .def_readonly("train_ms", &EvalReport::train_ms)
      .def_readonly("eval_ms", &EvalReport::eval_ms);
  m.def("evaluate",
        [](const Model& model, const FeatureSet& test, const std::vector<std::uint32_t>& ks) {
          return evaluate(model, test, ks);
        },
        py::arg("model"), py::arg("test"), py::arg("ks"));

  py::class_<KnnClassifier>(m, "KnnClassifier")
      .def(py::init<FeatureSet, std::size_t>(), py::arg("train"), py::arg("neighbors"))
      .def("rank", [](const KnnClassifier& k, const FloatArray& x) { return k.rank(vector_of(x)); },
           py::arg("query"))
      .def("predict",
           [](const KnnClassifier& k, const FloatArray& x) { return k.predict(vector_of(x)); },
           py::arg("query"));
  m.def("evaluate_knn",
        [](const KnnClassifier& knn, const FeatureSet& test, const std::vector<std::uint32_t>& ks) {
          return evaluate_knn(knn, test, ks);
        },
        py::arg("knn"), py::arg("test"), py::arg("ks"));

  py::class_<CurvePoint>(m, "CurvePoint")
      .def_readonly("classes_learned", &CurvePoint::classes_learned)
      .def_readonly("added_label", &CurvePoint::added_label)
      .def_readonly("top1", &CurvePoint::top1)
      .def_readonly("top5", &CurvePoint::top5)
      .def_readonly("batch_top1", &CurvePoint::batch_top1)
      .def_readonly("batch_top5", &CurvePoint::batch_top5)
      .def_readonly("test_samples", &CurvePoint::test_samples);
  m.def("incremental_curve", &incremental_curve, py::arg("train"), py::arg("test"),
        py::arg("options"), py::arg("order") = ClassOrder::LabelAscending,
        py::arg("order_seed") = 0);

  py::class_<TimingResult>(m, "TimingResult")
      .def_readonly("num_classes", &TimingResult::num_classes)
      .def_readonly("last_class", &TimingResult::last_class)
      .def_readonly("full_samples", &TimingResult::full_samples)
      .def_readonly("incremental_learn_calls", &TimingResult::incremental_learn_calls)
      .def_readonly("last_class_samples", &TimingResult::last_class_samples)
      .def_readonly("full_ms", &TimingResult::full_ms)
      .def_readonly("incremental_ms", &TimingResult::incremental_ms)
      .def_property_readonly("ratio", &TimingResult::ratio);
  m.def("bench_timing", &bench_timing, py::arg("quantizer"), py::arg("mode"), py::arg("train"),
        py::arg("repeats") = 5);
}

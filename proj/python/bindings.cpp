#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>

#include "qfe/checkpoint.hpp"
#include "qfe/gradients.hpp"
#include "qfe/layers.hpp"
#include "qfe/trainer.hpp"

namespace py = pybind11;
using namespace qfe;

namespace {

py::array_t<std::complex<double>> amplitudes_array(const Statevector& s) {
    py::array_t<std::complex<double>> out(static_cast<py::ssize_t>(s.size()));
    auto buf = out.mutable_unchecked<1>();
    const auto amps = s.amplitudes();
    for (py::ssize_t i = 0; i < out.size(); ++i) buf(i) = amps[static_cast<std::size_t>(i)];
    return out;
}

Statevector state_from_array(const py::array_t<std::complex<double>>& arr) {
    const auto buf = arr.unchecked<1>();
    int n = 0;
    while ((py::ssize_t{1} << n) < buf.shape(0)) ++n;
    if ((py::ssize_t{1} << n) != buf.shape(0))
        throw std::invalid_argument("state length must be a power of two");
    Statevector s(n);
    // Rebuild via gate-free construction: copy amplitudes directly.
    std::vector<std::complex<double>> amps(static_cast<std::size_t>(buf.shape(0)));
    for (py::ssize_t i = 0; i < buf.shape(0); ++i) amps[static_cast<std::size_t>(i)] = buf(i);
    return Statevector::from_amplitudes(n, std::move(amps));
}

FeatureMap map_from_array(const py::array_t<double>& arr) {
    if (arr.ndim() == 2) {
        FeatureMap fm(1, static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
        auto buf = arr.unchecked<2>();
        for (int i = 0; i < fm.height; ++i)
            for (int j = 0; j < fm.width; ++j) fm.at(0, i, j) = buf(i, j);
        return fm;
    }
    if (arr.ndim() == 3) {
        FeatureMap fm(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
                      static_cast<int>(arr.shape(2)));
        auto buf = arr.unchecked<3>();
        for (int c = 0; c < fm.channels; ++c)
            for (int i = 0; i < fm.height; ++i)
                for (int j = 0; j < fm.width; ++j) fm.at(c, i, j) = buf(c, i, j);
        return fm;
    }
    throw std::invalid_argument("feature map array must be 2d or 3d");
}

py::array_t<double> map_to_array(const FeatureMap& fm) {
    py::array_t<double> out({fm.channels, fm.height, fm.width});
    auto buf = out.mutable_unchecked<3>();
    for (int c = 0; c < fm.channels; ++c)
        for (int i = 0; i < fm.height; ++i)
            for (int j = 0; j < fm.width; ++j) buf(c, i, j) = fm.at(c, i, j);
    return out;
}

py::array_t<double> vec_to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    auto buf = out.mutable_unchecked<1>();
    for (py::ssize_t i = 0; i < out.size(); ++i) buf(i) = v[static_cast<std::size_t>(i)];
    return out;
}

std::vector<double> vec_from_array(const py::array_t<double>& arr) {
    const auto buf = arr.unchecked<1>();
    std::vector<double> v(static_cast<std::size_t>(buf.shape(0)));
    for (py::ssize_t i = 0; i < buf.shape(0); ++i) v[static_cast<std::size_t>(i)] = buf(i);
    return v;
}

// Python-facing wrapper that owns the layer plus the cache of the last
// forward pass, so backward() needs no extra bookkeeping on the caller side.
struct PyQfeLayer {
    QfeLayer layer;
    QfeLayer::Cache cache;

    PyQfeLayer(int in_channels, int filters, int kernel, const std::string& ansatz, int layers,
               bool fanout, const std::string& activation, std::uint64_t seed)
        : layer([&] {
              QfeConfig cfg;
              cfg.in_channels = in_channels;
              cfg.out_filters = filters;
              cfg.kernel = kernel;
              cfg.preset = {ansatz_from_name(ansatz), layers};
              if (fanout) {
                  cfg.observables.clear();
                  for (int q = 0; q < kernel * kernel; ++q)
                      cfg.observables.push_back(Observable::z(q));
              }
              if (activation == "identity") cfg.activation = Activation::Identity;
              else if (activation != "sigmoid")
                  throw std::invalid_argument("activation must be sigmoid or identity");
              return cfg;
          }()) {
        Rng rng(seed);
        layer.weights() = init_qfe_weights(layer.weights().size(), rng);
    }

    py::array_t<double> forward(const py::array_t<double>& input, bool want_grads) {
        return map_to_array(layer.forward(map_from_array(input), want_grads, cache));
    }

    py::tuple backward(const py::array_t<double>& upstream) {
        std::vector<double> dw(layer.weights().size(), 0.0), db(layer.bias().size(), 0.0);
        const FeatureMap d_in = layer.backward(cache, map_from_array(upstream), dw, db);
        return py::make_tuple(map_to_array(d_in), vec_to_array(dw), vec_to_array(db));
    }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Statevector simulation, parameter-shift gradients and QFE layers";

    py::class_<Gate>(m, "Gate")
        .def_static("h", &Gate::h, py::arg("target"))
        .def_static("rx", &Gate::rx, py::arg("target"), py::arg("angle"))
        .def_static("ry", &Gate::ry, py::arg("target"), py::arg("angle"))
        .def_static("rz", &Gate::rz, py::arg("target"), py::arg("angle"))
        .def_static("cnot", &Gate::cnot, py::arg("control"), py::arg("target"))
        .def_static("cz", &Gate::cz, py::arg("control"), py::arg("target"))
        .def_readonly("target", &Gate::target)
        .def_readonly("control", &Gate::control)
        .def_readonly("angle", &Gate::angle)
        .def("__repr__", [](const Gate& g) {
            return std::string("Gate(") + gate_kind_name(g.kind) + ", target=" +
                   std::to_string(g.target) + ")";
        });

    py::class_<Observable>(m, "Observable")
        .def_static("z", &Observable::z, py::arg("qubit"))
        .def_static("identity", &Observable::identity, py::arg("coeff") = 1.0)
        .def("weight_bound", &Observable::weight_bound);

    m.def("zero_state", [](int n_qubits) { return amplitudes_array(zero_state(n_qubits)); },
          py::arg("n_qubits"));
    m.def(
        "apply_gate",
        [](const py::array_t<std::complex<double>>& state, const Gate& gate) {
            Statevector s = state_from_array(state);
            s.apply(gate);
            return amplitudes_array(s);
        },
        py::arg("state"), py::arg("gate"));
    m.def(
        "run_circuit",
        [](int n_qubits, const std::vector<Gate>& gates) {
            return amplitudes_array(run_circuit(n_qubits, gates));
        },
        py::arg("n_qubits"), py::arg("gates"));
    m.def(
        "expectation",
        [](const py::array_t<std::complex<double>>& state, const Observable& obs) {
            return expectation(state_from_array(state), obs);
        },
        py::arg("state"), py::arg("observable"));

    py::class_<CircuitTemplate>(m, "CircuitTemplate")
        .def_readonly("n_qubits", &CircuitTemplate::n_qubits)
        .def_readonly("n_input_slots", &CircuitTemplate::n_input_slots)
        .def_readonly("n_weight_slots", &CircuitTemplate::n_weight_slots)
        .def(
            "bind",
            [](const CircuitTemplate& tpl, const std::vector<double>& inputs,
               const std::vector<double>& weights) { return tpl.bind(inputs, weights); },
            py::arg("inputs"), py::arg("weights"));

    m.def("build_encoder", &build_encoder, py::arg("n_qubits"));
    m.def(
        "build_ansatz",
        [](const std::string& name, int layers, int n_qubits) {
            return build_ansatz({ansatz_from_name(name), layers}, n_qubits);
        },
        py::arg("name"), py::arg("layers"), py::arg("n_qubits"));
    m.def(
        "weight_count",
        [](const std::string& name, int layers, int n_qubits) {
            return weight_count({ansatz_from_name(name), layers}, n_qubits);
        },
        py::arg("name"), py::arg("layers"), py::arg("n_qubits"));
    m.def("compose", &compose, py::arg("encoder"), py::arg("ansatz"));

    py::class_<PatchGradient>(m, "PatchGradient")
        .def_readonly("value", &PatchGradient::value)
        .def_property_readonly("d_inputs",
                               [](const PatchGradient& g) { return vec_to_array(g.d_inputs); })
        .def_property_readonly("d_weights",
                               [](const PatchGradient& g) { return vec_to_array(g.d_weights); });

    m.def(
        "patch_gradient",
        [](const CircuitTemplate& encoder, const CircuitTemplate& ansatz,
           const py::array_t<double>& inputs, const py::array_t<double>& weights,
           const Observable& obs) {
            return patch_gradient(encoder, ansatz, vec_from_array(inputs),
                                  vec_from_array(weights), obs);
        },
        py::arg("encoder"), py::arg("ansatz"), py::arg("inputs"), py::arg("weights"),
        py::arg("observable"));

    m.def("scaled_sigmoid", &scaled_sigmoid, py::arg("p"));
    m.def(
        "softmax_cross_entropy",
        [](const py::array_t<double>& logits, const py::array_t<double>& one_hot) {
            const LossResult r =
                softmax_cross_entropy(vec_from_array(logits), vec_from_array(one_hot));
            return py::make_tuple(r.loss, vec_to_array(r.d_logits));
        },
        py::arg("logits"), py::arg("one_hot"));

    py::class_<PyQfeLayer>(m, "QfeLayer")
        .def(py::init<int, int, int, const std::string&, int, bool, const std::string&,
                      std::uint64_t>(),
             py::arg("in_channels") = 1, py::arg("filters") = 1, py::arg("kernel") = 3,
             py::arg("ansatz") = "sim15", py::arg("layers") = 1, py::arg("fanout") = false,
             py::arg("activation") = "sigmoid", py::arg("seed") = 0)
        .def("forward", &PyQfeLayer::forward, py::arg("input"), py::arg("want_grads") = false)
        .def("backward", &PyQfeLayer::backward, py::arg("upstream"))
        .def_property_readonly("weights",
                               [](const PyQfeLayer& l) { return vec_to_array(l.layer.weights()); })
        .def_property_readonly("bias",
                               [](const PyQfeLayer& l) { return vec_to_array(l.layer.bias()); })
        .def_property_readonly("out_channels",
                               [](const PyQfeLayer& l) { return l.layer.out_channels(); });

    m.def(
        "train_run",
        [](const std::string& config_path, const std::vector<std::string>& overrides) {
            KvConfig kv = KvConfig::from_file(config_path);
            for (const std::string& pair : overrides) {
                const auto eq = pair.find('=');
                if (eq == std::string::npos)
                    throw std::invalid_argument("override must be key=value");
                kv.set(pair.substr(0, eq), pair.substr(eq + 1));
            }
            const RunConfig cfg = RunConfig::resolve(kv);
            const TrainResult res = train(cfg);
            py::list records;
            for (const MetricsRecord& r : res.records) {
                py::dict d;
                d["epoch"] = r.epoch;
                d["split"] = r.split;
                d["cost"] = r.cost;
                d["accuracy"] = r.accuracy;
                d["seconds"] = r.seconds;
                d["sims"] = r.sims;
                records.append(d);
            }
            py::dict out;
            out["records"] = records;
            out["metrics_path"] = res.metrics_path;
            out["checkpoint_path"] = res.checkpoint_path;
            return out;
        },
        py::arg("config_path"), py::arg("overrides") = std::vector<std::string>{});

    m.def(
        "synth_dataset",
        [](const std::string& dir, int train_count, int test_count, int side,
           std::uint64_t seed) {
            namespace fs = std::filesystem;
            fs::create_directories(dir);
            const RawDataset train = synth_digits(train_count, side, seed);
            const RawDataset test = synth_digits(test_count, side, seed + 1);
            write_idx_images((fs::path(dir) / "train-images-idx3-ubyte").string(), train.images);
            write_idx_labels((fs::path(dir) / "train-labels-idx1-ubyte").string(), train.labels);
            write_idx_images((fs::path(dir) / "t10k-images-idx3-ubyte").string(), test.images);
            write_idx_labels((fs::path(dir) / "t10k-labels-idx1-ubyte").string(), test.labels);
        },
        py::arg("dir"), py::arg("train_count") = 64, py::arg("test_count") = 32,
        py::arg("side") = 8, py::arg("seed") = 7);

    m.def("simulation_count", &simulation_count);
    m.def("reset_simulation_count", &reset_simulation_count);
}

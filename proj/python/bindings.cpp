#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <random>
#include <sstream>

#include "l2t/commands.hpp"
#include "l2t/config.hpp"
#include "l2t/conv.hpp"
#include "l2t/corpus.hpp"
#include "l2t/dln.hpp"
#include "l2t/error.hpp"
#include "l2t/hyena.hpp"
#include "l2t/metrics.hpp"
#include "l2t/nn.hpp"
#include "l2t/optim.hpp"
#include "l2t/param_utils.hpp"
#include "l2t/teacher.hpp"
#include "l2t/trainer.hpp"

namespace py = pybind11;
using namespace l2t;

namespace {

template <class T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <class T>
Tensor<T> to_tensor(const Array<T>& a) {
  std::vector<std::size_t> shape(a.shape(), a.shape() + a.ndim());
  Tensor<T> t(shape);
  if (t.size()) std::memcpy(t.data(), a.data(), t.size() * sizeof(T));
  return t;
}

template <class T>
Array<T> to_array(const Tensor<T>& t) {
  Array<T> a(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  if (t.size()) std::memcpy(a.mutable_data(), t.data(), t.size() * sizeof(T));
  return a;
}

corpus::TokenMatrix to_tokens(const Array<corpus::TokenId>& a) {
  if (a.ndim() != 2) throw ShapeError("token array must be 2-D (batch × sequence)");
  corpus::TokenMatrix m{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), {}};
  m.ids.assign(a.data(), a.data() + a.size());
  return m;
}

Array<corpus::TokenId> to_array(const corpus::TokenMatrix& m) {
  Array<corpus::TokenId> a({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)});
  if (!m.ids.empty()) std::memcpy(a.mutable_data(), m.ids.data(), m.ids.size() * sizeof(corpus::TokenId));
  return a;
}

std::vector<corpus::TokenBatch> to_batches(const std::vector<std::pair<Array<corpus::TokenId>, Array<corpus::TokenId>>>& in) {
  std::vector<corpus::TokenBatch> out;
  for (const auto& [x, y] : in) out.push_back({to_tokens(x), to_tokens(y)});
  return out;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict step_dict(const train::StepMetrics& m) {
  py::dict d;
  d["step"] = m.step;
  d["loss"] = m.loss;
  d["ce"] = m.ce;
  d["l2"] = m.l2;
  d["lambda"] = m.lambda;
  d["lr_student"] = m.lr_student;
  d["lr_teacher"] = m.lr_teacher;
  d["lr_dln"] = m.lr_dln;
  d["grad_norm_student"] = m.grad_norm_student;
  d["grad_norm_teacher"] = m.grad_norm_teacher;
  d["grad_norm_dln"] = m.grad_norm_dln;
  d["teacher_huber"] = m.teacher_huber;
  d["teacher_active"] = m.teacher_active;
  return d;
}

py::dict eval_dict(double loss, double ppl, std::size_t tokens) {
  py::dict d;
  d["val_loss"] = loss;
  d["val_ppl"] = ppl;
  d["tokens"] = tokens;
  return d;
}

cli::RunConfig config_from(const py::dict& values, const std::optional<std::filesystem::path>& file) {
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& [k, v] : values) {
    std::string text = py::isinstance<py::bool_>(v) ? (v.cast<bool>() ? "true" : "false") : py::str(v).cast<std::string>();
    if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      text.clear();
      for (const auto& item : v) text += (text.empty() ? "" : ",") + py::str(item).cast<std::string>();
    }
    overrides.emplace_back(k.cast<std::string>(), text);
  }
  return file ? cli::resolve_config(&*file, overrides) : cli::resolve_config(nullptr, overrides);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hyena language model with a learned loss-weighting schedule";

  auto base = py::register_exception<Error>(m, "L2TError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<CheckpointError>(m, "CheckpointError", base.ptr());
  py::register_exception<InvalidExperience>(m, "InvalidExperience", base.ptr());
  py::register_exception<EmptyBuffer>(m, "EmptyBuffer", base.ptr());
  (void)data;

  // configuration
  py::class_<cli::RunConfig>(m, "Config")
      .def(py::init([](const py::dict& values, const std::optional<std::filesystem::path>& file) {
             return config_from(values, file);
           }),
           py::arg("values") = py::dict(), py::arg("file") = std::nullopt)
      .def("__getitem__", [](const cli::RunConfig& c, const std::string& k) { return cli::get_config_value(c, k); })
      .def("__setitem__", [](cli::RunConfig& c, const std::string& k, const py::object& v) {
        std::string text = py::isinstance<py::bool_>(v) ? (v.cast<bool>() ? "true" : "false") : py::str(v).cast<std::string>();
        cli::set_config_value(c, k, text);
      })
      .def_static("keys", &cli::config_keys)
      .def("validate", [](const cli::RunConfig& c) { cli::validate(c); })
      .def("echo", &cli::echo_config)
      .def("__eq__", [](const cli::RunConfig& a, const cli::RunConfig& b) { return a == b; })
      .def("__repr__", [](const cli::RunConfig& c) { return "<Config mode=" + cli::to_string(c.mode) + ">"; });

  // corpus
  py::class_<corpus::Vocab>(m, "Vocab")
      .def_static("build", &corpus::build_vocab, py::arg("lines"), py::arg("max_size") = 10000)
      .def_static("from_tokens", &corpus::Vocab::from_tokens)
      .def("__len__", &corpus::Vocab::size)
      .def("id", [](const corpus::Vocab& v, const std::string& t) { return v.id(t); })
      .def("__contains__", [](const corpus::Vocab& v, const std::string& t) { return v.contains(t); })
      .def("token", &corpus::Vocab::token)
      .def_property_readonly("tokens", &corpus::Vocab::tokens)
      .def_property_readonly("unk_id", &corpus::Vocab::unk_id)
      .def_property_readonly("eos_id", &corpus::Vocab::eos_id)
      .def("encode", [](const corpus::Vocab& v, const std::vector<std::string>& lines) {
        const auto ids = corpus::encode(lines, v);
        return Array<corpus::TokenId>(static_cast<py::ssize_t>(ids.size()), ids.data());
      })
      .def("decode", [](const corpus::Vocab& v, const std::vector<corpus::TokenId>& ids) {
        return corpus::decode(ids, v);
      });

  m.def("synthetic_corpus", &corpus::synthetic_corpus, py::arg("n_tokens"), py::arg("n_words") = 200,
        py::arg("seed") = 0);
  m.def(
      "make_batches",
      [](const std::vector<corpus::TokenId>& ids, std::size_t batch_size, std::size_t seq_len) {
        py::list out;
        for (const auto& b : corpus::make_batches(ids, batch_size, seq_len))
          out.append(py::make_tuple(to_array(b.inputs), to_array(b.targets)));
        return out;
      },
      py::arg("ids"), py::arg("batch_size"), py::arg("seq_len"));
  m.def("batch_count", &corpus::batch_count);

  // numerics
  m.def(
      "fft_causal_conv", [](const Array<double>& u, const Array<double>& h) {
        return to_array(fft_causal_conv(to_tensor(u), to_tensor(h)));
      },
      py::arg("u"), py::arg("h"), "Causal convolution of u (B×L×C) with per-channel filters h (L×C).");
  m.def(
      "cross_entropy",
      [](const Array<double>& logits, const Array<corpus::TokenId>& targets) {
        return nn::cross_entropy(to_tensor(logits), to_tokens(targets));
      },
      py::arg("logits"), py::arg("targets"));
  m.def(
      "extract_features",
      [](const Array<double>& logits, const Array<corpus::TokenId>& targets) {
        return to_array(dln::extract_features(to_tensor(logits), to_tokens(targets)));
      },
      py::arg("logits"), py::arg("targets"),
      "Per-position batch means of confidence, target probability, margin, normalized entropy and CE.");
  m.def("huber", &teacher::huber, py::arg("pred"), py::arg("target"), py::arg("delta") = 1.0);
  m.def("cosine_warmup_lr", &optim::cosine_warmup_lr, py::arg("step"), py::arg("total_steps"),
        py::arg("warmup_steps"), py::arg("lr_max"), py::arg("lr_min"));
  m.def(
      "sample_prioritized",
      [](const std::vector<double>& losses, std::size_t k, std::uint64_t seed, double exponent) {
        teacher::MemoryBuffer buf(std::max<std::size_t>(losses.size(), 1));
        for (double l : losses) buf.push({{}, 0.5, l, 0});
        std::mt19937_64 rng(seed);
        return teacher::sample_prioritized_indices(buf, k, rng, exponent);
      },
      py::arg("losses"), py::arg("k"), py::arg("seed") = 0, py::arg("exponent") = 1.0,
      "Indices drawn with probability proportional to max(loss, 1e-6)^exponent.");

  // student model
  py::class_<hyena::HyenaParams<float>>(m, "HyenaModel")
      .def(py::init([](const cli::RunConfig& cfg, std::size_t vocab_size, std::uint64_t seed) {
             auto mc = cfg.model;
             mc.vocab_size = vocab_size;
             return hyena::init_model<float>(mc, seed);
           }),
           py::arg("config"), py::arg("vocab_size"), py::arg("seed") = 0)
      .def("forward", [](const hyena::HyenaParams<float>& p, const Array<corpus::TokenId>& tokens) {
        return to_array(hyena::forward(p, to_tokens(tokens)));
      })
      .def_property_readonly("parameter_count", [](const hyena::HyenaParams<float>& p) { return parameter_count(p); })
      .def("arrays", [](const hyena::HyenaParams<float>& p) {
        py::dict d;
        p.visit([&](const std::string& name, const Tensor<float>& t) { d[py::str(name)] = to_array(t); });
        return d;
      })
      .def("checksum", [](const hyena::HyenaParams<float>& p) { return checksum(p); });

  m.def("parameter_count", [](const cli::RunConfig& cfg) { return hyena::parameter_count(cfg.model); },
        "Closed-form parameter count of the configured student.");

  // training
  py::class_<train::Session>(m, "Session")
      .def(py::init([](const cli::RunConfig& cfg, std::size_t vocab_size, std::size_t batches_per_epoch) {
             cli::validate(cfg);
             return train::Session(cfg, vocab_size, train::make_schedule(cfg, batches_per_epoch));
           }),
           py::arg("config"), py::arg("vocab_size"), py::arg("batches_per_epoch"))
      .def("train_step",
           [](train::Session& s, const Array<corpus::TokenId>& x, const Array<corpus::TokenId>& y) {
             return step_dict(s.train_step({to_tokens(x), to_tokens(y)}));
           })
      .def("evaluate",
           [](const train::Session& s,
              const std::vector<std::pair<Array<corpus::TokenId>, Array<corpus::TokenId>>>& batches) {
             const auto r = s.evaluate(to_batches(batches));
             return eval_dict(r.val_loss, r.perplexity, r.tokens);
           })
      .def_property_readonly("steps_taken", &train::Session::steps_taken)
      .def_property_readonly("buffer_size", [](const train::Session& s) { return s.buffer().size(); })
      .def("save", [](const train::Session& s, const std::filesystem::path& p) { s.to_archive().save(p); })
      .def("load", [](train::Session& s, const std::filesystem::path& p) {
        s.load_archive(checkpoint::Archive::load(p));
      });

  m.def(
      "train",
      [](const cli::RunConfig& cfg) {
        train::TrainResult r;
        {
          py::gil_scoped_release release;
          r = train::train(cfg);
          cli::write_metrics(cfg.output_dir, r, cfg);
        }
        return json_to_py(cli::metrics_json(r, cfg));
      },
      py::arg("config"), "Full run. Writes checkpoints and metrics into config['output_dir'] and returns metrics.json.");
  m.def(
      "evaluate_checkpoint",
      [](const std::filesystem::path& ckpt, const cli::RunConfig& cfg) {
        const auto r = cli::evaluate_checkpoint(ckpt, cfg);
        return eval_dict(r.val_loss, r.perplexity, r.tokens);
      },
      py::arg("checkpoint"), py::arg("config"));
  m.def(
      "compare",
      [](const std::filesystem::path& baseline, const std::filesystem::path& candidate) {
        const auto r = cli::compare_runs(cli::load_run_summary(baseline), cli::load_run_summary(candidate));
        return json_to_py(cli::report_json(r));
      },
      py::arg("baseline_dir"), py::arg("candidate_dir"));
}

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "aligncr/checkpoint.hpp"
#include "aligncr/consistency.hpp"
#include "aligncr/ctc.hpp"
#include "aligncr/evalkit.hpp"
#include "aligncr/semisup.hpp"
#include "aligncr/trainer.hpp"

namespace py = pybind11;
using namespace aligncr;

namespace {

Array to_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  Array out = Array::zeros({static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1))});
  std::memcpy(out.v.data(), a.data(), out.size() * sizeof(double));
  return out;
}

py::array_t<double> from_array(const Array& a) {
  if (a.rank() != 2) throw std::invalid_argument("expected a matrix");
  py::array_t<double> out({a.rows(), a.cols()});
  std::memcpy(out.mutable_data(), a.v.data(), a.size() * sizeof(double));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Align-Consistency core: CTC forward-backward, alignment algebra, "
            "consistency loss and the toy refinement model";

  m.def("collapse", &collapse, py::arg("alignment"),
        "Merge repeats then delete blanks (blank id 0).");
  m.def(
      "greedy_decode",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logp) {
        return greedy_decode(to_array(logp));
      },
      py::arg("frame_log_probs"));
  m.def(
      "inverse_enumerate",
      [](const LabelSeq& y, int T, int vocab_size) {
        return inverse_enumerate(y, T, Vocab(vocab_size));
      },
      py::arg("label"), py::arg("num_frames"), py::arg("vocab_size"));

  m.def(
      "ctc_log_likelihood",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logp,
         const LabelSeq& y) { return ctc_log_likelihood(to_array(logp), y); },
      py::arg("frame_log_probs"), py::arg("label"));
  m.def(
      "ctc_loss_and_grad",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits,
         const LabelSeq& y) {
        Value v = Value::leaf(to_array(logits), true);
        CtcLoss r = ctc_loss(v, y);
        backward(r.loss);
        return py::make_tuple(r.loss.data().v[0], from_array(v.grad()), r.reachable);
      },
      py::arg("logits"), py::arg("label"),
      "Returns (loss, grad wrt logits, reachable).");

  m.def(
      "cr_loss",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& p1,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& p2) {
        return cr_loss(Value::leaf(to_array(p1)), Value::leaf(to_array(p2))).data().v[0];
      },
      py::arg("logp1"), py::arg("logp2"),
      "Symmetric-KL consistency loss between two log-probability matrices.");

  py::class_<ErrorRateReport>(m, "ErrorRateReport")
      .def_readonly("substitutions", &ErrorRateReport::substitutions)
      .def_readonly("deletions", &ErrorRateReport::deletions)
      .def_readonly("insertions", &ErrorRateReport::insertions)
      .def_readonly("reference_length", &ErrorRateReport::reference_length)
      .def("rate", &ErrorRateReport::rate);
  m.def("edit_distance", &edit_distance, py::arg("ref"), py::arg("hyp"));

  m.def(
      "generate_corpus",
      [](int vocab_size, int feat_dim, int num_utterances, double noise_stddev,
         std::uint64_t seed, const std::string& out_dir) {
        GenSpec spec;
        spec.vocab_size = vocab_size;
        spec.feat_dim = feat_dim;
        spec.num_utterances = num_utterances;
        spec.noise_stddev = noise_stddev;
        spec.corpus_seed = seed;
        write_corpus(generate_corpus(spec), out_dir);
      },
      py::arg("vocab_size"), py::arg("feat_dim"), py::arg("num_utterances"),
      py::arg("noise_stddev"), py::arg("seed"), py::arg("out_dir"));

  m.def(
      "decode_corpus",
      [](const std::string& checkpoint, const std::string& data_dir, int step) {
        ModelParams params = load_checkpoint(checkpoint);
        Corpus corpus = read_corpus(data_dir);
        std::map<std::string, LabelSeq> out;
        for (const Utterance& utt : corpus.utts) {
          StepOutputs so = forward_all_steps(utt.features, params, step);
          out[utt.id] = collapse(so.alignments[step]);
        }
        return out;
      },
      py::arg("checkpoint"), py::arg("data_dir"), py::arg("step") = 0);
}

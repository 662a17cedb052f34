// Acceptance checks for the classifier: one line per criterion, nonzero
// exit if any of them fail. Heavier end-to-end checks drive the CLI binary
// the same way a user would.

#include "rfqc/cells.hpp"
#include "rfqc/corpus.hpp"
#include "rfqc/embedding.hpp"
#include "rfqc/io.hpp"
#include "rfqc/model.hpp"
#include "rfqc/numerics.hpp"
#include "rfqc/training.hpp"

#include "support.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace rfqc;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

// --- 1. cell forward passes vs scalar transcriptions ----------------------

Outcome check_cell_fidelity() {
  Prng rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int steps = 1 + static_cast<int>(rng.next_below(5));
    std::vector<double> xs(steps);
    for (auto& x : xs) x = testsupport::uniform_pm(rng, 2.0);
    auto as_inputs = [&] {
      std::vector<Vec> inputs;
      for (double x : xs) inputs.push_back(Vec::Constant(1, x));
      return inputs;
    };

    {  // basic rnn
      const double u = testsupport::uniform_pm(rng, 2.0);
      const double w = testsupport::uniform_pm(rng, 2.0);
      RnnParams p;
      p.U = Mat::Constant(1, 1, u);
      p.W = Mat::Constant(1, 1, w);
      const auto [got, cache] = rnn_encode(p, as_inputs(), Activation::Tanh);
      double s = 0.0;
      for (double x : xs) s = testsupport::scalar_rnn_tanh(u, w, x, s);
      worst = std::max(worst, std::abs(got[0] - s));
    }
    {  // lstm
      testsupport::ScalarLstm p;
      p.w_i = testsupport::uniform_pm(rng, 2.0);
      p.w_f = testsupport::uniform_pm(rng, 2.0);
      p.w_o = testsupport::uniform_pm(rng, 2.0);
      p.w_g = testsupport::uniform_pm(rng, 2.0);
      p.u_i = testsupport::uniform_pm(rng, 2.0);
      p.u_f = testsupport::uniform_pm(rng, 2.0);
      p.u_o = testsupport::uniform_pm(rng, 2.0);
      p.u_g = testsupport::uniform_pm(rng, 2.0);
      LstmParams lp;
      lp.W_i = Mat::Constant(1, 1, p.w_i);
      lp.W_f = Mat::Constant(1, 1, p.w_f);
      lp.W_o = Mat::Constant(1, 1, p.w_o);
      lp.W_g = Mat::Constant(1, 1, p.w_g);
      lp.U_i = Mat::Constant(1, 1, p.u_i);
      lp.U_f = Mat::Constant(1, 1, p.u_f);
      lp.U_o = Mat::Constant(1, 1, p.u_o);
      lp.U_g = Mat::Constant(1, 1, p.u_g);
      const auto [got, cache] = lstm_encode(lp, as_inputs());
      double h = 0.0, c = 0.0;
      for (double x : xs) {
        const auto out = testsupport::scalar_lstm(p, x, h, c);
        h = out.h;
        c = out.c;
      }
      worst = std::max(worst, std::abs(got[0] - h));
    }
    {  // gru
      testsupport::ScalarGru p;
      p.w_z = testsupport::uniform_pm(rng, 2.0);
      p.w_r = testsupport::uniform_pm(rng, 2.0);
      p.w_c = testsupport::uniform_pm(rng, 2.0);
      p.u_z = testsupport::uniform_pm(rng, 2.0);
      p.u_r = testsupport::uniform_pm(rng, 2.0);
      p.u_c = testsupport::uniform_pm(rng, 2.0);
      GruParams gp;
      gp.W_z = Mat::Constant(1, 1, p.w_z);
      gp.W_r = Mat::Constant(1, 1, p.w_r);
      gp.W_c = Mat::Constant(1, 1, p.w_c);
      gp.U_z = Mat::Constant(1, 1, p.u_z);
      gp.U_r = Mat::Constant(1, 1, p.u_r);
      gp.U_c = Mat::Constant(1, 1, p.u_c);
      const auto [got, cache] = gru_encode(gp, as_inputs());
      double h = 0.0;
      for (double x : xs) h = testsupport::scalar_gru(p, x, h).h;
      worst = std::max(worst, std::abs(got[0] - h));
    }
  }
  return {worst <= 1e-12, "max abs deviation " + fmt("%.3g", worst) + " over 100 draws/cell"};
}

// --- 2. gradients vs central finite differences ----------------------------

Outcome check_gradients() {
  double worst = 0.0;
  for (auto kind : {ModelKind::Rnn, ModelKind::Lstm, ModelKind::Gru, ModelKind::Fusion}) {
    Prng rng(2000 + static_cast<int>(kind));
    for (int trial = 0; trial < 50; ++trial) {
      ModelDims dims;
      dims.vocab_size = 12;
      dims.dim = 3;
      dims.hidden = 4;
      dims.num_classes = 3;
      const ClassifierModel model = init_model(kind, dims, rng);
      LabeledExample example;
      example.tokens.resize(5);
      for (auto& id : example.tokens) id = 2 + static_cast<int>(rng.next_below(10));
      example.label = static_cast<int>(rng.next_below(3));
      worst = std::max(worst, grad_check(model, example, 1e-5));
    }
  }
  return {worst <= 1e-4, "max relative error " + fmt("%.3g", worst) + " over 50 instances/kind"};
}

// --- 3. analytic spot values -----------------------------------------------

Outcome check_spot_values() {
  std::ostringstream bad;

  LstmParams lstm;
  const Mat z = Mat::Zero(1, 1);
  lstm.W_i = z; lstm.W_f = z; lstm.W_o = z; lstm.W_g = z;
  lstm.U_i = z; lstm.U_f = z; lstm.U_o = z; lstm.U_g = z;
  const LstmStep ls = lstm_step(lstm, Vec::Zero(1), Vec::Zero(1), Vec::Constant(1, 2.0));
  if (std::abs(ls.c[0] - 1.0) > 1e-12) bad << " lstm c_t=" << ls.c[0];
  if (std::abs(ls.h[0] - 0.5 * std::tanh(1.0)) > 1e-12) bad << " lstm h_t=" << ls.h[0];

  GruParams gru;
  gru.W_z = z; gru.W_r = z; gru.W_c = z;
  gru.U_z = z; gru.U_r = z; gru.U_c = z;
  const GruStep gs = gru_step(gru, Vec::Zero(1), Vec::Constant(1, 1.0));
  if (std::abs(gs.h[0] - 0.5) > 1e-12) bad << " gru h_t=" << gs.h[0];

  Prng rng(3001);
  ModelDims dims;
  dims.vocab_size = 30;
  dims.dim = 4;
  dims.hidden = 4;
  dims.num_classes = 20;
  ClassifierModel model = init_model(ModelKind::Fusion, dims, rng);
  model.head.setZero();
  const auto [probs, cache] = forward(model, {2, 5, 9}, 0.0, false, rng);
  for (int k = 0; k < probs.size(); ++k) {
    if (std::abs(probs[k] - 0.05) > 1e-12) {
      bad << " prob[" << k << "]=" << probs[k];
      break;
    }
  }
  if (std::abs(cross_entropy(probs, 7) - std::log(20.0)) > 1e-9) {
    bad << " ce=" << cross_entropy(probs, 7);
  }

  if (bad.str().empty()) {
    return {true, "lstm(0-weights, c_prev=2), gru(0-weights, h_prev=1), zero-head C=20 all exact"};
  }
  return {false, "off:" + bad.str()};
}

// --- 4. optimizer ------------------------------------------------------------

Outcome check_adam() {
  for (double g : {0.37, -1.5}) {
    Mat theta = Mat::Zero(1, 1);
    Mat grad = Mat::Constant(1, 1, g);
    std::vector<Mat*> params{&theta};
    AdamState state = AdamState::like(params);
    adam_step(state, params, {&grad}, 0.01);
    if (std::abs(theta(0, 0) + 0.01 * (g > 0 ? 1.0 : -1.0)) > 1e-6) {
      return {false, "first step moved to " + fmt("%.8f", theta(0, 0))};
    }
  }

  Mat theta = Mat::Constant(1, 1, 1.0);
  std::vector<Mat*> params{&theta};
  AdamState state = AdamState::like(params);
  int steps = 0;
  while (steps < 200 && std::abs(theta(0, 0)) >= 0.01) {
    Mat grad = Mat::Constant(1, 1, 2.0 * theta(0, 0));
    adam_step(state, params, {&grad}, 0.02);
    ++steps;
  }
  if (std::abs(theta(0, 0)) >= 0.01) {
    return {false, "theta still " + fmt("%.4f", theta(0, 0)) + " after 200 steps"};
  }
  return {true, "step-1 = -lr*sign(g); theta^2 minimized in " + std::to_string(steps) +
                    " steps at lr=0.02"};
}

// --- 5. split protocol --------------------------------------------------------

Outcome check_split() {
  std::vector<LabeledExample> examples(17387);
  for (int k = 0; k < 17387; ++k) examples[k].label = k;
  Prng rng(42);
  const DatasetSplit split = split_dataset(examples, {0.6, 0.2, 0.2}, rng);
  if (split.train.size() != 10432 || split.val.size() != 3477 || split.test.size() != 3478) {
    return {false, "17387 split to " + std::to_string(split.train.size()) + "/" +
                       std::to_string(split.val.size()) + "/" + std::to_string(split.test.size())};
  }

  Prng meta(43);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(meta.next_below(2000));
    std::vector<LabeledExample> batch(n);
    for (int k = 0; k < n; ++k) batch[k].label = k;
    Prng inner(meta.next_u64());
    const DatasetSplit s = split_dataset(batch, {0.6, 0.2, 0.2}, inner);
    std::vector<int> seen;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      for (const auto& ex : *part) seen.push_back(ex.label);
    }
    std::sort(seen.begin(), seen.end());
    for (int k = 0; k < n; ++k) {
      if (seen[static_cast<std::size_t>(k)] != k) {
        return {false, "N=" + std::to_string(n) + " lost or duplicated example " +
                           std::to_string(k)};
      }
    }
  }
  return {true, "17387 -> 10432/3477/3478; 100 random splits conserve their examples"};
}

// --- 6/7/8. end-to-end CLI runs ----------------------------------------------

struct CliRuns {
  testsupport::TempDir dir;
  std::string tsv, vocab;
  std::vector<std::string> reports;  // rnn, lstm, gru, fusion
  std::map<std::string, TrainingReport> parsed;
  bool trained = false;
  std::string failure;
};

void run_training_suite(CliRuns& runs) {
  Prng rng(606);
  const auto records = testsupport::synthetic_corpus(3000, 6, 5, 20, 6, 20, rng);
  runs.tsv = runs.dir.file("synthetic.tsv");
  testsupport::write_tsv(runs.tsv, records);
  runs.vocab = runs.dir.file("synthetic.vocab");

  const std::string cli = RFQC_CLI_PATH;
  auto vr = testsupport::run_cmd({cli, "vocab", "--input", runs.tsv, "--out", runs.vocab},
                                 runs.dir);
  if (vr.status != 0) {
    runs.failure = "vocab exited " + std::to_string(vr.status);
    return;
  }

  for (const std::string kind : {"rnn", "lstm", "gru", "fusion"}) {
    const std::string ckpt = runs.dir.file(kind + ".ckpt");
    const std::string report = runs.dir.file(kind + ".report");
    const auto tr = testsupport::run_cmd(
        {cli, "train", "--input", runs.tsv, "--vocab", runs.vocab, "--model", kind, "--hidden",
         "64", "--dim", "64", "--epochs", "10", "--seed", "0", "--out", ckpt, "--report", report},
        runs.dir);
    if (tr.status != 0) {
      runs.failure = kind + " train exited " + std::to_string(tr.status) + ": " + tr.err;
      return;
    }
    runs.reports.push_back(report);
    runs.parsed[kind] = load_report(report);
  }
  runs.trained = true;
}

Outcome check_end_to_end(CliRuns& runs, double wall_seconds) {
  if (!runs.trained) return {false, runs.failure};
  std::ostringstream bad;
  for (const std::string kind : {"fusion", "lstm", "gru"}) {
    const double acc = runs.parsed[kind].test_accuracy;
    if (acc < 0.95) bad << " " << kind << " accuracy " << fmt("%.4f", acc);
  }
  for (const auto& [kind, report] : runs.parsed) {
    if (report.epochs.size() < 5 || report.epochs[4].train_loss >= report.epochs[0].train_loss) {
      bad << " " << kind << " loss not falling";
    }
  }
  if (wall_seconds >= 300.0) bad << " took " << fmt("%.0f", wall_seconds) << "s";
  if (!bad.str().empty()) return {false, "off:" + bad.str()};

  std::ostringstream detail;
  detail << "test acc rnn/lstm/gru/fusion " << fmt("%.3f", runs.parsed["rnn"].test_accuracy) << "/"
         << fmt("%.3f", runs.parsed["lstm"].test_accuracy) << "/"
         << fmt("%.3f", runs.parsed["gru"].test_accuracy) << "/"
         << fmt("%.3f", runs.parsed["fusion"].test_accuracy) << ", losses fall, "
         << fmt("%.0f", wall_seconds) << "s";
  return {true, detail.str()};
}

Outcome check_determinism(CliRuns& runs) {
  if (!runs.trained) return {false, "skipped: training suite failed"};
  const std::string cli = RFQC_CLI_PATH;
  std::array<std::string, 2> ckpts, reports;
  for (int round = 0; round < 2; ++round) {
    ckpts[round] = runs.dir.file("det" + std::to_string(round) + ".ckpt");
    reports[round] = runs.dir.file("det" + std::to_string(round) + ".report");
    const auto r = testsupport::run_cmd(
        {cli, "train", "--input", runs.tsv, "--vocab", runs.vocab, "--model", "gru", "--hidden",
         "16", "--dim", "16", "--epochs", "2", "--seed", "7", "--out", ckpts[round], "--report",
         reports[round]},
        runs.dir);
    if (r.status != 0) return {false, "rerun exited " + std::to_string(r.status)};
  }
  if (testsupport::slurp(ckpts[0]) != testsupport::slurp(ckpts[1])) {
    return {false, "checkpoints differ between identical runs"};
  }
  if (testsupport::slurp(reports[0]) != testsupport::slurp(reports[1])) {
    return {false, "reports differ between identical runs"};
  }
  return {true, "repeated train runs match byte for byte"};
}

Outcome check_report_table(CliRuns& runs) {
  if (!runs.trained) return {false, "skipped: training suite failed"};
  const std::string cli = RFQC_CLI_PATH;
  std::vector<std::string> argv{cli, "report", "--inputs"};
  argv.insert(argv.end(), runs.reports.begin(), runs.reports.end());
  const auto r = testsupport::run_cmd(argv, runs.dir);
  if (r.status != 0) return {false, "report exited " + std::to_string(r.status)};
  const auto lines = testsupport::split_lines(r.out);
  if (lines.size() != 5) return {false, "expected 5 lines, got " + std::to_string(lines.size())};
  if (lines[0] != "Methods\tAccuracy\tLoss") return {false, "bad header: " + lines[0]};
  const std::array<std::string, 4> kinds{"rnn", "lstm", "gru", "fusion"};
  for (int k = 0; k < 4; ++k) {
    std::istringstream row(lines[static_cast<std::size_t>(k) + 1]);
    std::string method, acc, loss;
    std::getline(row, method, '\t');
    std::getline(row, acc, '\t');
    std::getline(row, loss, '\t');
    if (method != kinds[static_cast<std::size_t>(k)]) {
      return {false, "row " + std::to_string(k + 1) + " method " + method};
    }
    if (acc.empty() || acc.back() != '%') return {false, "accuracy cell '" + acc + "'"};
    if (loss.empty()) return {false, "empty loss cell"};
  }
  return {true, "four-row Methods/Accuracy/Loss table"};
}

// --- 9. embedding co-occurrence ----------------------------------------------

Outcome check_embedding_pretraining() {
  // Tokens 2 and 3 only ever appear in alternating runs, so every
  // occurrence of one sits beside the other; everything else is noise.
  Prng rng(909);
  const int vocab = 40;
  std::vector<std::vector<int>> corpus;
  for (int s = 0; s < 400; ++s) {
    std::vector<int> sentence;
    if (s % 2 == 0) {
      const bool flip = rng.next_uniform() < 0.5;
      const int reps = 2 + static_cast<int>(rng.next_below(3));
      for (int rpt = 0; rpt < reps; ++rpt) {
        sentence.push_back(flip ? 3 : 2);
        sentence.push_back(flip ? 2 : 3);
      }
    } else {
      const int len = 6 + static_cast<int>(rng.next_below(5));
      for (int t = 0; t < len; ++t) {
        sentence.push_back(4 + static_cast<int>(rng.next_below(vocab - 4)));
      }
    }
    corpus.push_back(std::move(sentence));
  }

  SkipGramConfig config;
  config.epochs = 3;
  EmbeddingTable table = init_embeddings(vocab, 16, rng);
  table = skipgram_pretrain(corpus, std::move(table), config, rng, nullptr);

  const double pair_cos =
      cosine(table.weights.row(2).transpose(), table.weights.row(3).transpose());
  std::vector<double> others;
  for (int id = 4; id < vocab; ++id) {
    others.push_back(cosine(table.weights.row(2).transpose(), table.weights.row(id).transpose()));
  }
  std::sort(others.begin(), others.end());
  const double p95 = others[static_cast<std::size_t>(0.95 * others.size())];
  const bool ok = pair_cos > p95;
  return {ok, "cosine(A,B) " + fmt("%.3f", pair_cos) + " vs 95th percentile " + fmt("%.3f", p95)};
}

// --- 10. class statistics ------------------------------------------------------

Outcome check_statistics() {
  testsupport::TempDir dir;
  const std::string tsv = dir.file("census.tsv");
  testsupport::write_tsv(tsv, testsupport::census_records());
  const std::string cli = RFQC_CLI_PATH;
  const auto r = testsupport::run_cmd({cli, "vocab", "--input", tsv, "--out", dir.file("v")},
                                      dir);
  if (r.status != 0) return {false, "vocab exited " + std::to_string(r.status)};
  for (const auto& dept : testsupport::department_census()) {
    const std::string row =
        std::string(dept.name) + "\t" + std::to_string(dept.count) + "\t" + dept.percent;
    if (r.out.find(row) == std::string::npos) {
      return {false, "missing row: " + row};
    }
  }
  if (r.out.find("total\t17387\t100.00%") == std::string::npos) {
    return {false, "missing total row"};
  }
  return {true, "all 20 class proportions match to two decimals"};
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& outcome, double seconds) {
    std::printf("%s  %2d. %s — %s (%.1fs)\n", outcome.ok ? "PASS" : "FAIL", id, name,
                outcome.detail.c_str(), seconds);
    if (!outcome.ok) ++failures;
  };
  auto timed = [&](int id, const char* name, const std::function<Outcome()>& fn,
                   double budget_seconds) {
    const auto start = clock::now();
    Outcome outcome;
    try {
      outcome = fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(clock::now() - start).count();
    if (outcome.ok && budget_seconds > 0.0 && seconds >= budget_seconds) {
      outcome = {false, outcome.detail + " [over " + fmt("%.0f", budget_seconds) + "s budget]"};
    }
    report(id, name, outcome, seconds);
  };

  timed(1, "cell-equation fidelity", check_cell_fidelity, 1.0);
  timed(2, "backpropagation vs finite differences", check_gradients, 60.0);
  timed(3, "analytic spot values", check_spot_values, 0.0);
  timed(4, "adam optimizer behavior", check_adam, 1.0);
  timed(5, "dataset split protocol", check_split, 5.0);

  CliRuns runs;
  const auto start = clock::now();
  try {
    run_training_suite(runs);
  } catch (const std::exception& e) {
    runs.failure = std::string("exception: ") + e.what();
  }
  const double train_seconds = std::chrono::duration<double>(clock::now() - start).count();
  timed(6, "end-to-end synthetic learning",
        [&] { return check_end_to_end(runs, train_seconds); }, 0.0);
  timed(7, "byte-level determinism", [&] { return check_determinism(runs); }, 0.0);
  timed(8, "aggregate report table", [&] { return check_report_table(runs); }, 0.0);
  timed(9, "embedding co-occurrence structure", check_embedding_pretraining, 30.0);
  timed(10, "class statistics fidelity", check_statistics, 0.0);

  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all 10 criteria passed\n");
  return 0;
}

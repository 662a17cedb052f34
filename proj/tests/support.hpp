#pragma once

// Shared test fixtures: hand-written scalar recurrences used as oracles, a
// synthetic separable corpus, a department census table, and small process
// helpers for the CLI integration tests.

#include "rfqc/corpus.hpp"
#include "rfqc/numerics.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

inline double sigma(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// Scalar transcriptions of the three cells at H = D = 1, written straight
// from the recurrences with plain arithmetic. The library is expected to
// reproduce these to within rounding noise.
// ---------------------------------------------------------------------------

inline double scalar_rnn_tanh(double u, double w, double x, double s_prev) {
  return std::tanh(u * x + w * s_prev);
}

struct ScalarLstm {
  double w_i, w_f, w_o, w_g;
  double u_i, u_f, u_o, u_g;
};
struct ScalarLstmOut {
  double i, f, o, g, c, h;
};
inline ScalarLstmOut scalar_lstm(const ScalarLstm& p, double x, double h_prev, double c_prev) {
  ScalarLstmOut s;
  s.i = sigma(p.w_i * h_prev + p.u_i * x);
  s.f = sigma(p.w_f * h_prev + p.u_f * x);
  s.o = sigma(p.w_o * h_prev + p.u_o * x);
  s.g = std::tanh(p.w_g * h_prev + p.u_g * x);
  s.c = c_prev * s.f + s.g * s.i;
  s.h = std::tanh(s.c) * s.o;
  return s;
}

struct ScalarGru {
  double w_z, w_r, w_c;
  double u_z, u_r, u_c;
};
struct ScalarGruOut {
  double z, r, c, h;
};
inline ScalarGruOut scalar_gru(const ScalarGru& p, double x, double h_prev) {
  ScalarGruOut s;
  s.z = sigma(p.w_z * h_prev + p.u_z * x);
  s.r = sigma(p.w_r * h_prev + p.u_r * x);
  s.c = std::tanh(p.w_c * (h_prev * s.r) + p.u_c * x);
  s.h = s.z * s.c + (1.0 - s.z) * h_prev;
  return s;
}

// ---------------------------------------------------------------------------
// Random tensors and finite differences.
// ---------------------------------------------------------------------------

inline double uniform_pm(rfqc::Prng& rng, double scale) {
  return (2.0 * rng.next_uniform() - 1.0) * scale;
}

inline rfqc::Mat random_mat(int rows, int cols, double scale, rfqc::Prng& rng) {
  rfqc::Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = uniform_pm(rng, scale);
  }
  return m;
}

inline rfqc::Vec random_vec(int n, double scale, rfqc::Prng& rng) {
  rfqc::Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform_pm(rng, scale);
  return v;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Central difference of loss() w.r.t. one coefficient reached by reference.
template <typename F>
double central_diff(double& coeff, F&& loss, double eps) {
  const double saved = coeff;
  coeff = saved + eps;
  const double up = loss();
  coeff = saved - eps;
  const double down = loss();
  coeff = saved;
  return (up - down) / (2.0 * eps);
}

// ---------------------------------------------------------------------------
// Synthetic corpora.
// ---------------------------------------------------------------------------

// n questions over n_classes balanced classes. Class k owns sig_per_class
// signature tokens; every class shares one filler pool. Each question mixes
// the two roughly 50/50 and always opens with a signature token, so the
// classes are separable but not trivially so.
inline std::vector<rfqc::Record> synthetic_corpus(int n, int n_classes, int sig_per_class,
                                                  int n_filler, int min_len, int max_len,
                                                  rfqc::Prng& rng) {
  std::vector<rfqc::Record> records;
  records.reserve(n);
  for (int k = 0; k < n; ++k) {
    const int cls = k % n_classes;
    const int len =
        min_len + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_len - min_len + 1)));
    std::string text;
    for (int t = 0; t < len; ++t) {
      if (!text.empty()) text += ' ';
      if (t == 0 || rng.next_uniform() < 0.5) {
        text += "sig" + std::to_string(cls) + "_" +
                std::to_string(rng.next_below(static_cast<std::uint64_t>(sig_per_class)));
      } else {
        text += "filler" + std::to_string(rng.next_below(static_cast<std::uint64_t>(n_filler)));
      }
    }
    records.emplace_back("class" + std::to_string(cls), text);
  }
  return records;
}

inline void write_tsv(const std::string& path, const std::vector<rfqc::Record>& records) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& r : records) out << r.first << '\t' << r.second << '\n';
}

// A 20-department census with hand-checked two-decimal percentages; the
// counts sum to 17387.
struct Department {
  const char* name;
  long long count;
  const char* percent;
};

inline const std::vector<Department>& department_census() {
  static const std::vector<Department> rows = {
      {"Internal Medicine", 3692, "21.23%"},
      {"surgical", 3327, "19.13%"},
      {"Obstetrics and Gynecology", 3096, "17.81%"},
      {"Pediatrics", 847, "4.87%"},
      {"Traditional Chinese Medicine", 329, "1.89%"},
      {"Dermatology", 2492, "14.33%"},
      {"health care", 9, "0.05%"},
      {"Plastic Surgery", 263, "1.51%"},
      {"Mental Health Section", 511, "2.94%"},
      {"five senses", 1222, "7.03%"},
      {"Infectious Diseases", 559, "3.22%"},
      {"Oncology", 377, "2.17%"},
      {"drug", 12, "0.07%"},
      {"genetic", 14, "0.08%"},
      {"home environment", 30, "0.17%"},
      {"Other departments", 69, "0.40%"},
      {"cosmetic", 420, "2.42%"},
      {"Auxiliary examination department", 22, "0.13%"},
      {"exercise to lose weight", 61, "0.35%"},
      {"Department of Rehabilitation Medicine", 35, "0.20%"},
  };
  return rows;
}

inline std::vector<rfqc::Record> census_records() {
  std::vector<rfqc::Record> records;
  for (const auto& dept : department_census()) {
    for (long long k = 0; k < dept.count; ++k) {
      records.emplace_back(dept.name, "question text " + std::to_string(k % 7));
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Filesystem and process helpers.
// ---------------------------------------------------------------------------

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("rfqc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CmdResult {
  int status = -1;
  std::string out, err;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') q += "'\\''";
    else q += c;
  }
  q += "'";
  return q;
}

// Runs argv[0] with the given arguments, capturing exit status and both
// output streams.
inline CmdResult run_cmd(const std::vector<std::string>& argv, const TempDir& dir) {
  std::string cmd;
  for (const auto& a : argv) {
    if (!cmd.empty()) cmd += ' ';
    cmd += shell_quote(a);
  }
  const std::string out_path = dir.file("cmd.out"), err_path = dir.file("cmd.err");
  cmd += " > " + shell_quote(out_path) + " 2> " + shell_quote(err_path);
  const int raw = std::system(cmd.c_str());
  CmdResult result;
  if (raw != -1 && WIFEXITED(raw)) result.status = WEXITSTATUS(raw);
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace testsupport

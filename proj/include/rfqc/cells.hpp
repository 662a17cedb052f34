#pragma once

#include "rfqc/numerics.hpp"

#include <string>
#include <utility>
#include <vector>

namespace rfqc {

// Activation applied to the RNN pre-activation. LSTM and GRU gates are
// fixed to sigmoid/tanh and do not consult this.
enum class Activation { Tanh, Relu, Sigmoid };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation act);

// ---------------------------------------------------------------------------
// Plain recurrent cell:  preact_t = U x_t + W s_{t-1};  s_t = f(preact_t).
// No bias terms anywhere in these cells.
// ---------------------------------------------------------------------------

struct RnnParams {
  Mat U;  // H x D
  Mat W;  // H x H

  int hidden() const { return static_cast<int>(U.rows()); }
  int input_dim() const { return static_cast<int>(U.cols()); }
};

struct RnnStep {
  Vec preact;
  Vec state;
};

struct RnnCache {
  std::vector<Vec> inputs;
  std::vector<RnnStep> steps;
  Activation act = Activation::Tanh;
};

struct RnnGrads {
  Mat dU, dW;
  std::vector<Vec> d_inputs;
};

RnnStep rnn_step(const RnnParams& p, const Vec& x, const Vec& s_prev,
                 Activation act = Activation::Tanh);
std::pair<Vec, RnnCache> rnn_encode(const RnnParams& p, const std::vector<Vec>& xs,
                                    Activation act = Activation::Tanh);
RnnGrads rnn_backward(const RnnParams& p, const RnnCache& cache, const Vec& d_final);

// ---------------------------------------------------------------------------
// LSTM:
//   i = sigma(W_i h_{t-1} + U_i x_t)      f = sigma(W_f h_{t-1} + U_f x_t)
//   o = sigma(W_o h_{t-1} + U_o x_t)      g = tanh (W_g h_{t-1} + U_g x_t)
//   c_t = c_{t-1} (*) f + g (*) i         h_t = tanh(c_t) (*) o
// ---------------------------------------------------------------------------

struct LstmParams {
  Mat W_i, W_f, W_o, W_g;  // H x H
  Mat U_i, U_f, U_o, U_g;  // H x D

  int hidden() const { return static_cast<int>(U_i.rows()); }
  int input_dim() const { return static_cast<int>(U_i.cols()); }
};

struct LstmStep {
  Vec i, f, o, g;
  Vec c, tanh_c, h;
};

struct LstmCache {
  std::vector<Vec> inputs;
  std::vector<LstmStep> steps;
};

struct LstmGrads {
  Mat dW_i, dW_f, dW_o, dW_g;
  Mat dU_i, dU_f, dU_o, dU_g;
  std::vector<Vec> d_inputs;
};

/// State update given gate values; split out so tests can inject gates.
std::pair<Vec, Vec> lstm_state_update(const Vec& i, const Vec& f, const Vec& o, const Vec& g,
                                      const Vec& c_prev);  // -> (h_t, c_t)
LstmStep lstm_step(const LstmParams& p, const Vec& x, const Vec& h_prev, const Vec& c_prev);
std::pair<Vec, LstmCache> lstm_encode(const LstmParams& p, const std::vector<Vec>& xs);
LstmGrads lstm_backward(const LstmParams& p, const LstmCache& cache, const Vec& d_final);

// ---------------------------------------------------------------------------
// GRU, with the update gate weighting the candidate:
//   z = sigma(W_z h_{t-1} + U_z x_t)      r = sigma(W_r h_{t-1} + U_r x_t)
//   c = tanh(W_c (h_{t-1} (*) r) + U_c x_t)
//   h_t = z (*) c + (1 - z) (*) h_{t-1}
// ---------------------------------------------------------------------------

struct GruParams {
  Mat W_z, W_r, W_c;  // H x H
  Mat U_z, U_r, U_c;  // H x D

  int hidden() const { return static_cast<int>(U_z.rows()); }
  int input_dim() const { return static_cast<int>(U_z.cols()); }
};

struct GruStep {
  Vec z, r, c;  // c is the candidate state
  Vec h;
};

struct GruCache {
  std::vector<Vec> inputs;
  std::vector<GruStep> steps;
};

struct GruGrads {
  Mat dW_z, dW_r, dW_c;
  Mat dU_z, dU_r, dU_c;
  std::vector<Vec> d_inputs;
};

GruStep gru_step(const GruParams& p, const Vec& x, const Vec& h_prev);
std::pair<Vec, GruCache> gru_encode(const GruParams& p, const std::vector<Vec>& xs);
GruGrads gru_backward(const GruParams& p, const GruCache& cache, const Vec& d_final);

}  // namespace rfqc

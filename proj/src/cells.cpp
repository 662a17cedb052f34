#include "rfqc/cells.hpp"

namespace rfqc {
namespace {

void check_dims(const char* op, int h, int d, const Vec& x, const Vec& s_prev) {
  if (x.size() != d || s_prev.size() != h) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch");
  }
}

Vec activate(const Vec& preact, Activation act) {
  switch (act) {
    case Activation::Tanh: return tanh_act(preact);
    case Activation::Relu: return relu(preact);
    case Activation::Sigmoid: return sigmoid(preact);
  }
  throw std::invalid_argument("unknown activation");
}

// Derivative through the cached pre-activation/output pair.
Vec activate_grad(const Vec& preact, const Vec& out, Activation act) {
  switch (act) {
    case Activation::Tanh: return (1.0 - out.array().square()).matrix();
    case Activation::Relu: return (preact.array() > 0.0).cast<double>().matrix();
    case Activation::Sigmoid: return (out.array() * (1.0 - out.array())).matrix();
  }
  throw std::invalid_argument("unknown activation");
}

}  // namespace

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown rnn activation '" + s +
                              "' (valid: tanh, relu, sigmoid)");
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "tanh";
}

// ---------------------------------------------------------------------- RNN

RnnStep rnn_step(const RnnParams& p, const Vec& x, const Vec& s_prev, Activation act) {
  check_dims("rnn_step", p.hidden(), p.input_dim(), x, s_prev);
  RnnStep step;
  step.preact = p.U * x + p.W * s_prev;
  step.state = activate(step.preact, act);
  return step;
}

std::pair<Vec, RnnCache> rnn_encode(const RnnParams& p, const std::vector<Vec>& xs,
                                    Activation act) {
  if (xs.empty()) throw std::invalid_argument("rnn_encode: empty sequence");
  RnnCache cache;
  cache.inputs = xs;
  cache.act = act;
  Vec s = Vec::Zero(p.hidden());
  for (const Vec& x : xs) {
    cache.steps.push_back(rnn_step(p, x, s, act));
    s = cache.steps.back().state;
  }
  return {s, cache};
}

RnnGrads rnn_backward(const RnnParams& p, const RnnCache& cache, const Vec& d_final) {
  const int h = p.hidden(), d = p.input_dim();
  const auto steps = cache.steps.size();
  if (steps == 0 || steps != cache.inputs.size() || cache.inputs[0].size() != d ||
      cache.steps[0].state.size() != h || d_final.size() != h) {
    throw std::invalid_argument("rnn_backward: cache does not match params");
  }

  RnnGrads grads{Mat::Zero(h, d), Mat::Zero(h, h), std::vector<Vec>(steps)};
  Vec d_state = d_final;
  const Vec zero = Vec::Zero(h);
  for (std::size_t t = steps; t-- > 0;) {
    const RnnStep& step = cache.steps[t];
    const Vec d_pre =
        d_state.cwiseProduct(activate_grad(step.preact, step.state, cache.act));
    const Vec& s_prev = t > 0 ? cache.steps[t - 1].state : zero;
    grads.dU.noalias() += d_pre * cache.inputs[t].transpose();
    grads.dW.noalias() += d_pre * s_prev.transpose();
    grads.d_inputs[t] = p.U.transpose() * d_pre;
    d_state = p.W.transpose() * d_pre;
  }
  return grads;
}

// --------------------------------------------------------------------- LSTM

std::pair<Vec, Vec> lstm_state_update(const Vec& i, const Vec& f, const Vec& o, const Vec& g,
                                      const Vec& c_prev) {
  Vec c = c_prev.cwiseProduct(f) + g.cwiseProduct(i);
  Vec h = tanh_act(c).cwiseProduct(o);
  return {h, c};
}

LstmStep lstm_step(const LstmParams& p, const Vec& x, const Vec& h_prev, const Vec& c_prev) {
  check_dims("lstm_step", p.hidden(), p.input_dim(), x, h_prev);
  if (c_prev.size() != p.hidden()) throw std::invalid_argument("lstm_step: dimension mismatch");
  LstmStep step;
  step.i = sigmoid(p.W_i * h_prev + p.U_i * x);
  step.f = sigmoid(p.W_f * h_prev + p.U_f * x);
  step.o = sigmoid(p.W_o * h_prev + p.U_o * x);
  step.g = tanh_act(p.W_g * h_prev + p.U_g * x);
  step.c = c_prev.cwiseProduct(step.f) + step.g.cwiseProduct(step.i);
  step.tanh_c = tanh_act(step.c);
  step.h = step.tanh_c.cwiseProduct(step.o);
  return step;
}

std::pair<Vec, LstmCache> lstm_encode(const LstmParams& p, const std::vector<Vec>& xs) {
  if (xs.empty()) throw std::invalid_argument("lstm_encode: empty sequence");
  LstmCache cache;
  cache.inputs = xs;
  Vec h = Vec::Zero(p.hidden()), c = Vec::Zero(p.hidden());
  for (const Vec& x : xs) {
    cache.steps.push_back(lstm_step(p, x, h, c));
    h = cache.steps.back().h;
    c = cache.steps.back().c;
  }
  return {h, cache};
}

LstmGrads lstm_backward(const LstmParams& p, const LstmCache& cache, const Vec& d_final) {
  const int h = p.hidden(), d = p.input_dim();
  const auto steps = cache.steps.size();
  if (steps == 0 || steps != cache.inputs.size() || cache.inputs[0].size() != d ||
      cache.steps[0].h.size() != h || d_final.size() != h) {
    throw std::invalid_argument("lstm_backward: cache does not match params");
  }

  LstmGrads grads{Mat::Zero(h, h), Mat::Zero(h, h), Mat::Zero(h, h), Mat::Zero(h, h),
                  Mat::Zero(h, d), Mat::Zero(h, d), Mat::Zero(h, d), Mat::Zero(h, d),
                  std::vector<Vec>(steps)};
  Vec d_h = d_final;
  Vec d_c = Vec::Zero(h);
  const Vec zero = Vec::Zero(h);
  for (std::size_t t = steps; t-- > 0;) {
    const LstmStep& step = cache.steps[t];
    const Vec& h_prev = t > 0 ? cache.steps[t - 1].h : zero;
    const Vec& c_prev = t > 0 ? cache.steps[t - 1].c : zero;

    const Vec d_o = d_h.cwiseProduct(step.tanh_c);
    d_c += d_h.cwiseProduct(step.o)
               .cwiseProduct((1.0 - step.tanh_c.array().square()).matrix());

    const Vec d_f = d_c.cwiseProduct(c_prev);
    const Vec d_i = d_c.cwiseProduct(step.g);
    const Vec d_g = d_c.cwiseProduct(step.i);
    const Vec d_c_prev = d_c.cwiseProduct(step.f);

    const Vec d_zi = d_i.cwiseProduct(step.i).cwiseProduct((1.0 - step.i.array()).matrix());
    const Vec d_zf = d_f.cwiseProduct(step.f).cwiseProduct((1.0 - step.f.array()).matrix());
    const Vec d_zo = d_o.cwiseProduct(step.o).cwiseProduct((1.0 - step.o.array()).matrix());
    const Vec d_zg = d_g.cwiseProduct((1.0 - step.g.array().square()).matrix());

    const Vec& x = cache.inputs[t];
    grads.dW_i.noalias() += d_zi * h_prev.transpose();
    grads.dW_f.noalias() += d_zf * h_prev.transpose();
    grads.dW_o.noalias() += d_zo * h_prev.transpose();
    grads.dW_g.noalias() += d_zg * h_prev.transpose();
    grads.dU_i.noalias() += d_zi * x.transpose();
    grads.dU_f.noalias() += d_zf * x.transpose();
    grads.dU_o.noalias() += d_zo * x.transpose();
    grads.dU_g.noalias() += d_zg * x.transpose();

    grads.d_inputs[t] = p.U_i.transpose() * d_zi + p.U_f.transpose() * d_zf +
                        p.U_o.transpose() * d_zo + p.U_g.transpose() * d_zg;
    d_h = p.W_i.transpose() * d_zi + p.W_f.transpose() * d_zf + p.W_o.transpose() * d_zo +
          p.W_g.transpose() * d_zg;
    d_c = d_c_prev;
  }
  return grads;
}

// ---------------------------------------------------------------------- GRU

GruStep gru_step(const GruParams& p, const Vec& x, const Vec& h_prev) {
  check_dims("gru_step", p.hidden(), p.input_dim(), x, h_prev);
  GruStep step;
  step.z = sigmoid(p.W_z * h_prev + p.U_z * x);
  step.r = sigmoid(p.W_r * h_prev + p.U_r * x);
  step.c = tanh_act(p.W_c * h_prev.cwiseProduct(step.r) + p.U_c * x);
  step.h = step.z.cwiseProduct(step.c) +
           (1.0 - step.z.array()).matrix().cwiseProduct(h_prev);
  return step;
}

std::pair<Vec, GruCache> gru_encode(const GruParams& p, const std::vector<Vec>& xs) {
  if (xs.empty()) throw std::invalid_argument("gru_encode: empty sequence");
  GruCache cache;
  cache.inputs = xs;
  Vec h = Vec::Zero(p.hidden());
  for (const Vec& x : xs) {
    cache.steps.push_back(gru_step(p, x, h));
    h = cache.steps.back().h;
  }
  return {h, cache};
}

GruGrads gru_backward(const GruParams& p, const GruCache& cache, const Vec& d_final) {
  const int h = p.hidden(), d = p.input_dim();
  const auto steps = cache.steps.size();
  if (steps == 0 || steps != cache.inputs.size() || cache.inputs[0].size() != d ||
      cache.steps[0].h.size() != h || d_final.size() != h) {
    throw std::invalid_argument("gru_backward: cache does not match params");
  }

  GruGrads grads{Mat::Zero(h, h), Mat::Zero(h, h), Mat::Zero(h, h),
                 Mat::Zero(h, d), Mat::Zero(h, d), Mat::Zero(h, d),
                 std::vector<Vec>(steps)};
  Vec d_h = d_final;
  const Vec zero = Vec::Zero(h);
  for (std::size_t t = steps; t-- > 0;) {
    const GruStep& step = cache.steps[t];
    const Vec& h_prev = t > 0 ? cache.steps[t - 1].h : zero;
    const Vec& x = cache.inputs[t];

    const Vec d_z = d_h.cwiseProduct(step.c - h_prev);
    const Vec d_cand = d_h.cwiseProduct(step.z);
    Vec d_h_prev = d_h.cwiseProduct((1.0 - step.z.array()).matrix());

    // The reset gate multiplies h_prev inside W_c's argument.
    const Vec d_zc = d_cand.cwiseProduct((1.0 - step.c.array().square()).matrix());
    grads.dW_c.noalias() += d_zc * h_prev.cwiseProduct(step.r).transpose();
    grads.dU_c.noalias() += d_zc * x.transpose();
    const Vec d_hr = p.W_c.transpose() * d_zc;
    d_h_prev += d_hr.cwiseProduct(step.r);
    const Vec d_r = d_hr.cwiseProduct(h_prev);

    const Vec d_zz = d_z.cwiseProduct(step.z).cwiseProduct((1.0 - step.z.array()).matrix());
    const Vec d_zr = d_r.cwiseProduct(step.r).cwiseProduct((1.0 - step.r.array()).matrix());
    grads.dW_z.noalias() += d_zz * h_prev.transpose();
    grads.dW_r.noalias() += d_zr * h_prev.transpose();
    grads.dU_z.noalias() += d_zz * x.transpose();
    grads.dU_r.noalias() += d_zr * x.transpose();

    grads.d_inputs[t] = p.U_z.transpose() * d_zz + p.U_r.transpose() * d_zr +
                        p.U_c.transpose() * d_zc;
    d_h_prev += p.W_z.transpose() * d_zz + p.W_r.transpose() * d_zr;
    d_h = d_h_prev;
  }
  return grads;
}

}  // namespace rfqc

#include "gait3d/model.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace gait3d::nn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

ConvGeometry conv_geometry(const Conv3dSpec& c, std::size_t in_channels) {
  return {c.filters, in_channels, c.kt, c.kh, c.kw};
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError("model spec: " + what);
}

}  // namespace

std::vector<Shape4> ModelSpec::shapes() const {
  require(input.size() > 0, "empty input shape");
  require(!layers.empty(), "no layers");
  std::vector<Shape4> out;
  out.reserve(layers.size());
  Shape4 cur = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const bool last = i + 1 == layers.size();
    cur = std::visit(
        Overloaded{
            [&](const Conv3dSpec& c) {
              require(c.filters >= 1, "conv3d needs >= 1 filter");
              return conv_geometry(c, cur.c).output_shape(cur);
            },
            [&](const MaxPool3dSpec& p) { return p.pool.output_shape(cur); },
            [&](const FlattenSpec&) { return Shape4{cur.size(), 1, 1, 1}; },
            [&](const DropoutSpec& d) {
              if (!(d.rate >= 0.0 && d.rate < 1.0)) {
                throw ParameterError("dropout rate must be in [0, 1)");
              }
              return cur;
            },
            [&](const DenseSpec& d) {
              require(cur.t == 1 && cur.h == 1 && cur.w == 1,
                      "dense layer " + std::to_string(i) + " needs a flattened input, got " +
                          cur.str());
              require(d.units >= 1, "dense needs >= 1 unit");
              return Shape4{d.units, 1, 1, 1};
            },
            [&](const SoftmaxSpec&) {
              require(last, "softmax must be the final layer");
              require(i > 0 && std::holds_alternative<DenseSpec>(layers[i - 1]) &&
                          std::get<DenseSpec>(layers[i - 1]).activation == Activation::kNone,
                      "softmax must follow a dense layer without activation");
              return cur;
            }},
        layers[i]);
    out.push_back(cur);
  }
  require(std::holds_alternative<SoftmaxSpec>(layers.back()), "last layer must be softmax");
  require(out.back().c >= 2, "at least two classes required");
  return out;
}

std::size_t ModelSpec::num_classes() const { return shapes().back().c; }

std::vector<std::pair<std::size_t, std::size_t>> ModelSpec::param_sizes() const {
  const auto sh = shapes();
  std::vector<std::pair<std::size_t, std::size_t>> sizes;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Shape4 in = i == 0 ? input : sh[i - 1];
    if (const auto* c = std::get_if<Conv3dSpec>(&layers[i])) {
      sizes.emplace_back(conv_geometry(*c, in.c).weight_count(), c->filters);
    } else if (const auto* d = std::get_if<DenseSpec>(&layers[i])) {
      sizes.emplace_back(in.c * d->units, d->units);
    } else {
      sizes.emplace_back(0, 0);
    }
  }
  return sizes;
}

std::size_t ModelSpec::param_count() const {
  std::size_t n = 0;
  for (const auto& [w, b] : param_sizes()) n += w + b;
  return n;
}

ModelSpec default_model_spec(const Shape4& input, std::size_t num_classes) {
  ModelSpec spec;
  spec.input = input;
  spec.layers = {
      Conv3dSpec{8, 3, 3, 3},
      MaxPool3dSpec{},
      Conv3dSpec{16, 3, 3, 3},
      MaxPool3dSpec{},
      FlattenSpec{},
      DropoutSpec{0.3},
      DenseSpec{64, Activation::kTanh},
      DropoutSpec{0.3},
      DenseSpec{num_classes, Activation::kNone},
      SoftmaxSpec{},
  };
  spec.shapes();
  return spec;
}

ModelSpec parse_model_spec(std::string_view text, const Shape4& input,
                           std::size_t num_classes) {
  ModelSpec spec;
  spec.input = input;
  std::istringstream lines{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream in(line);
    std::string kind;
    if (!(in >> kind)) continue;
    auto fail = [&](const std::string& why) {
      throw ParameterError("model spec line " + std::to_string(line_no) + ": " + why);
    };
    auto read_size = [&]() {
      long v = 0;
      if (!(in >> v) || v < 1) fail("expected a positive integer");
      return static_cast<std::size_t>(v);
    };
    if (kind == "conv3d") {
      Conv3dSpec c;
      c.filters = read_size();
      c.kt = read_size();
      c.kh = read_size();
      c.kw = read_size();
      spec.layers.emplace_back(c);
    } else if (kind == "maxpool3d") {
      MaxPool3dSpec p;
      p.pool.wt = read_size();
      p.pool.wh = read_size();
      p.pool.ww = read_size();
      if (in >> std::ws && !in.eof()) {
        p.pool.st = read_size();
        p.pool.sh = read_size();
        p.pool.sw = read_size();
      } else {
        p.pool.st = p.pool.wt;
        p.pool.sh = p.pool.wh;
        p.pool.sw = p.pool.ww;
      }
      spec.layers.emplace_back(p);
    } else if (kind == "flatten") {
      spec.layers.emplace_back(FlattenSpec{});
    } else if (kind == "dropout") {
      double rate = -1;
      if (!(in >> rate)) fail("expected a dropout rate");
      spec.layers.emplace_back(DropoutSpec{rate});
    } else if (kind == "dense") {
      std::string units;
      if (!(in >> units)) fail("expected a unit count");
      DenseSpec d;
      if (units == "classes") {
        d.units = num_classes;
      } else {
        try {
          d.units = std::stoul(units);
        } catch (const std::exception&) {
          fail("bad unit count '" + units + "'");
        }
      }
      std::string act;
      if (in >> act) {
        if (act != "tanh") fail("unknown activation '" + act + "'");
        d.activation = Activation::kTanh;
      }
      spec.layers.emplace_back(d);
    } else if (kind == "softmax") {
      spec.layers.emplace_back(SoftmaxSpec{});
    } else {
      fail("unknown layer '" + kind + "'");
    }
    std::string extra;
    if (in >> extra) fail("unexpected token '" + extra + "'");
  }
  spec.shapes();
  return spec;
}

std::string format_model_spec(const ModelSpec& spec) {
  std::ostringstream out;
  out << "# input " << spec.input.str() << "\n";
  for (const auto& layer : spec.layers) {
    std::visit(Overloaded{
                   [&](const Conv3dSpec& c) {
                     out << "conv3d " << c.filters << ' ' << c.kt << ' ' << c.kh << ' '
                         << c.kw << '\n';
                   },
                   [&](const MaxPool3dSpec& p) {
                     out << "maxpool3d " << p.pool.wt << ' ' << p.pool.wh << ' ' << p.pool.ww
                         << ' ' << p.pool.st << ' ' << p.pool.sh << ' ' << p.pool.sw << '\n';
                   },
                   [&](const FlattenSpec&) { out << "flatten\n"; },
                   [&](const DropoutSpec& d) { out << "dropout " << d.rate << '\n'; },
                   [&](const DenseSpec& d) {
                     out << "dense " << d.units
                         << (d.activation == Activation::kTanh ? " tanh" : "") << '\n';
                   },
                   [&](const SoftmaxSpec&) { out << "softmax\n"; }},
               layer);
  }
  return out.str();
}

ModelParams zero_params(const ModelSpec& spec) {
  ModelParams p;
  for (const auto& [w, b] : spec.param_sizes()) {
    p.blocks.push_back({std::vector<double>(w, 0.0), std::vector<double>(b, 0.0)});
  }
  return p;
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  const auto sh = spec.shapes();
  ModelParams p = zero_params(spec);
  Rng rng(seed);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const Shape4 in = i == 0 ? spec.input : sh[i - 1];
    double fan_in = 0;
    double fan_out = 0;
    if (const auto* c = std::get_if<Conv3dSpec>(&spec.layers[i])) {
      const double taps = static_cast<double>(c->kt * c->kh * c->kw);
      fan_in = static_cast<double>(in.c) * taps;
      fan_out = static_cast<double>(c->filters) * taps;
    } else if (const auto* d = std::get_if<DenseSpec>(&spec.layers[i])) {
      fan_in = static_cast<double>(in.c);
      fan_out = static_cast<double>(d->units);
    } else {
      continue;
    }
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : p.blocks[i].weights) w = rng.uniform(-s, s);
  }
  return p;
}

namespace {

void check_same_shape(const ModelParams& a, const ModelParams& b) {
  bool ok = a.blocks.size() == b.blocks.size();
  for (std::size_t i = 0; ok && i < a.blocks.size(); ++i) {
    ok = a.blocks[i].weights.size() == b.blocks[i].weights.size() &&
         a.blocks[i].bias.size() == b.blocks[i].bias.size();
  }
  if (!ok) throw ShapeError("parameter sets have different shapes");
}

}  // namespace

void sgd_step(ModelParams& params, const ModelParams& grads, double learning_rate) {
  check_same_shape(params, grads);
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be > 0");
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    auto& p = params.blocks[i];
    const auto& g = grads.blocks[i];
    for (std::size_t k = 0; k < p.weights.size(); ++k) p.weights[k] -= learning_rate * g.weights[k];
    for (std::size_t k = 0; k < p.bias.size(); ++k) p.bias[k] -= learning_rate * g.bias[k];
  }
}

void accumulate(ModelParams& grads, const ModelParams& other) {
  check_same_shape(grads, other);
  for (std::size_t i = 0; i < grads.blocks.size(); ++i) {
    auto& g = grads.blocks[i];
    const auto& o = other.blocks[i];
    for (std::size_t k = 0; k < g.weights.size(); ++k) g.weights[k] += o.weights[k];
    for (std::size_t k = 0; k < g.bias.size(); ++k) g.bias[k] += o.bias[k];
  }
}

void scale(ModelParams& grads, double factor) {
  for (auto& g : grads.blocks) {
    for (auto& v : g.weights) v *= factor;
    for (auto& v : g.bias) v *= factor;
  }
}

std::vector<double> forward(const ModelSpec& spec, const ModelParams& params,
                            const Tensor4& input, Mode mode, Rng* rng, Trace* trace) {
  const auto sh = spec.shapes();
  if (input.shape() != spec.input) {
    throw ShapeError("input shape " + input.shape().str() + " does not match model input " +
                     spec.input.str());
  }
  if (params.blocks.size() != spec.layers.size()) {
    throw ShapeError("parameter block count does not match the layer count");
  }
  if (mode == Mode::kTrain && rng == nullptr) {
    throw ParameterError("training forward pass needs a random generator");
  }
  if (trace) {
    trace->activations.assign(1, input);
    trace->argmax.assign(spec.layers.size(), {});
    trace->keep.assign(spec.layers.size(), {});
  }
  Tensor4 cur = input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& layer = spec.layers[i];
    const Shape4 in_shape = cur.shape();
    if (const auto* c = std::get_if<Conv3dSpec>(&layer)) {
      cur = conv3d_forward(cur, conv_geometry(*c, in_shape.c), params.blocks[i]);
    } else if (const auto* p = std::get_if<MaxPool3dSpec>(&layer)) {
      PoolResult r = maxpool3d_forward(cur, p->pool);
      if (trace) trace->argmax[i] = std::move(r.argmax);
      cur = std::move(r.output);
    } else if (std::holds_alternative<FlattenSpec>(layer)) {
      cur = std::move(cur).reshaped(sh[i]);
    } else if (const auto* d = std::get_if<DropoutSpec>(&layer)) {
      Rng unused(0);
      DropoutResult r = dropout_forward(cur.values(), d->rate, mode, rng ? *rng : unused);
      if (trace) trace->keep[i] = std::move(r.keep);
      cur = Tensor4(sh[i], std::move(r.output));
    } else if (const auto* d = std::get_if<DenseSpec>(&layer)) {
      std::vector<double> out =
          dense_forward(cur.values(), DenseGeometry{in_shape.c, d->units}, params.blocks[i]);
      if (d->activation == Activation::kTanh) tanh_inplace(out);
      cur = Tensor4(sh[i], std::move(out));
    }
    // Softmax is applied by the loss / prediction code on the logits.
    if (trace) trace->activations.push_back(cur);
  }
  return std::vector<double>(cur.values().begin(), cur.values().end());
}

ModelParams backward(const ModelSpec& spec, const ModelParams& params, const Trace& trace,
                     std::span<const double> grad_logits) {
  const auto sh = spec.shapes();
  if (trace.activations.size() != spec.layers.size() + 1) {
    throw ShapeError("trace does not match the model");
  }
  ModelParams grads = zero_params(spec);
  Tensor4 grad(sh.back(), std::vector<double>(grad_logits.begin(), grad_logits.end()));
  for (std::size_t n = spec.layers.size(); n-- > 0;) {
    const auto& layer = spec.layers[n];
    const Tensor4& in = trace.activations[n];
    const Tensor4& out = trace.activations[n + 1];
    if (const auto* c = std::get_if<Conv3dSpec>(&layer)) {
      Conv3dGrads g = conv3d_backward(grad, in, out, conv_geometry(*c, in.shape().c),
                                      params.blocks[n], n > 0);
      grads.blocks[n] = std::move(g.grads);
      if (n > 0) grad = std::move(g.grad_input);
    } else if (std::holds_alternative<MaxPool3dSpec>(layer)) {
      grad = maxpool3d_backward(grad, trace.argmax[n], in.shape());
    } else if (std::holds_alternative<FlattenSpec>(layer)) {
      grad = std::move(grad).reshaped(in.shape());
    } else if (const auto* d = std::get_if<DropoutSpec>(&layer)) {
      grad = Tensor4(in.shape(), dropout_backward(grad.values(), trace.keep[n], d->rate));
    } else if (const auto* d = std::get_if<DenseSpec>(&layer)) {
      std::vector<double> g(grad.values().begin(), grad.values().end());
      if (d->activation == Activation::kTanh) g = tanh_backward(g, out.values());
      DenseGrads dg = dense_backward(g, in.values(), DenseGeometry{in.shape().c, d->units},
                                     params.blocks[n]);
      grads.blocks[n] = std::move(dg.grads);
      grad = Tensor4(in.shape(), std::move(dg.grad_input));
    }
  }
  return grads;
}

}  // namespace gait3d::nn

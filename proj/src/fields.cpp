#include "rl/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rl/errors.hpp"

namespace rl {

namespace {

struct NameParam {
  std::string name;
  double param = 0.0;
  std::string raw;
};

NameParam split(const std::string& spec) {
  NameParam out;
  const auto colon = spec.find(':');
  out.name = spec.substr(0, colon);
  if (colon != std::string::npos) {
    out.raw = spec.substr(colon + 1);
    if (out.name != "file") {
      try {
        std::size_t used = 0;
        out.param = std::stod(out.raw, &used);
        if (used != out.raw.size()) throw std::invalid_argument(out.raw);
      } catch (const std::exception&) {
        fail(ErrorKind::Validation, "field spec '" + spec + "': bad numeric parameter");
      }
    }
  }
  return out;
}

TensorJet zero_jet(int dim) {
  TensorJet j;
  j.value = Mat::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    j.d[k] = Mat::Zero(dim, dim);
    for (int l = 0; l < dim; ++l) j.dd[k][l] = Mat::Zero(dim, dim);
  }
  return j;
}

class ZeroTensor final : public TensorField {
 public:
  explicit ZeroTensor(int dim) : dim_(dim) {}
  TensorJet jet(const Vec&) const override { return zero_jet(dim_); }
  bool is_zero() const override { return true; }
  bool isotropic() const override { return true; }
  std::string name() const override { return "zero"; }

 private:
  int dim_;
};

// eps (1 + |z|^2) Id
class IsoTensor final : public TensorField {
 public:
  IsoTensor(int dim, double eps) : dim_(dim), eps_(eps) {}
  TensorJet jet(const Vec& z) const override {
    TensorJet j = zero_jet(dim_);
    const Mat id = Mat::Identity(dim_, dim_);
    j.value = eps_ * (1.0 + z.squaredNorm()) * id;
    for (int k = 0; k < dim_; ++k) {
      j.d[k] = 2.0 * eps_ * z(k) * id;
      j.dd[k][k] = 2.0 * eps_ * id;
    }
    return j;
  }
  bool isotropic() const override { return true; }
  std::string name() const override { return "iso:" + std::to_string(eps_); }

 private:
  int dim_;
  double eps_;
};

// eps exp(-|z|^2) (Id + z z^T)
class BumpTensor final : public TensorField {
 public:
  BumpTensor(int dim, double eps) : dim_(dim), eps_(eps) {}
  TensorJet jet(const Vec& z) const override {
    TensorJet j = zero_jet(dim_);
    const double e = std::exp(-z.squaredNorm());
    const Mat M = Mat::Identity(dim_, dim_) + z * z.transpose();
    Vec de(dim_);
    for (int k = 0; k < dim_; ++k) de(k) = -2.0 * z(k) * e;
    Mat dM[kMaxDim];
    for (int k = 0; k < dim_; ++k) {
      Vec ek = Vec::Zero(dim_);
      ek(k) = 1.0;
      dM[k] = ek * z.transpose() + z * ek.transpose();
    }
    j.value = eps_ * e * M;
    for (int k = 0; k < dim_; ++k) {
      j.d[k] = eps_ * (de(k) * M + e * dM[k]);
      for (int l = 0; l < dim_; ++l) {
        const double dde = (-2.0 * (k == l ? 1.0 : 0.0) + 4.0 * z(k) * z(l)) * e;
        Mat ddM = Mat::Zero(dim_, dim_);
        ddM(k, l) += 1.0;
        ddM(l, k) += 1.0;
        j.dd[k][l] = eps_ * (dde * M + de(k) * dM[l] + de(l) * dM[k] + e * ddM);
      }
    }
    return j;
  }
  bool isotropic() const override { return true; }
  std::string name() const override { return "bump:" + std::to_string(eps_); }

 private:
  int dim_;
  double eps_;
};

class TabulatedTensor final : public TensorField {
 public:
  TabulatedTensor(TabulatedGrid grid, std::string path) : grid_(std::move(grid)), path_(std::move(path)) {}
  TensorJet jet(const Vec& z) const override {
    const int d = grid_.dim();
    const int c = d * d;
    std::vector<double> val(c), grad(c * d), hess(c * d * d);
    grid_.eval(z, val.data(), grad.data(), hess.data());
    TensorJet j = zero_jet(d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        const int ci = a * d + b;
        j.value(a, b) = val[ci];
        for (int k = 0; k < d; ++k) {
          j.d[k](a, b) = grad[ci * d + k];
          for (int l = 0; l < d; ++l) j.dd[k][l](a, b) = hess[(ci * d + k) * d + l];
        }
      }
    return j;
  }
  std::string name() const override { return "file:" + path_; }

 private:
  TabulatedGrid grid_;
  std::string path_;
};

class ZeroScalar final : public ScalarField {
 public:
  double value(const Vec&) const override { return 0.0; }
  bool is_zero() const override { return true; }
  bool isotropic() const override { return true; }
  std::string name() const override { return "zero"; }
};

class FormulaScalar final : public ScalarField {
 public:
  enum class Kind { Const, Radial, Gauss };
  FormulaScalar(Kind k, double c, std::string name) : kind_(k), c_(c), name_(std::move(name)) {}
  double value(const Vec& z) const override {
    switch (kind_) {
      case Kind::Const: return c_;
      case Kind::Radial: return c_ * (1.0 + z.squaredNorm());
      case Kind::Gauss: return c_ * std::exp(-z.squaredNorm());
    }
    return 0.0;
  }
  bool is_zero() const override { return c_ == 0.0; }
  bool isotropic() const override { return true; }
  std::string name() const override { return name_; }

 private:
  Kind kind_;
  double c_;
  std::string name_;
};

class TabulatedScalar final : public ScalarField {
 public:
  TabulatedScalar(TabulatedGrid grid, std::string path) : grid_(std::move(grid)), path_(std::move(path)) {}
  double value(const Vec& z) const override {
    double v = 0.0;
    grid_.eval(z, &v, nullptr, nullptr);
    return v;
  }
  std::string name() const override { return "file:" + path_; }

 private:
  TabulatedGrid grid_;
  std::string path_;
};

// Catmull-Rom weights and their first/second derivatives in t.
void cr_weights(double t, double w[4], double dw[4], double ddw[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2 * t2 - t);
  w[1] = 0.5 * (3 * t3 - 5 * t2 + 2);
  w[2] = 0.5 * (-3 * t3 + 4 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
  dw[0] = 0.5 * (-3 * t2 + 4 * t - 1);
  dw[1] = 0.5 * (9 * t2 - 10 * t);
  dw[2] = 0.5 * (-9 * t2 + 8 * t + 1);
  dw[3] = 0.5 * (3 * t2 - 2 * t);
  ddw[0] = 0.5 * (-6 * t + 4);
  ddw[1] = 0.5 * (18 * t - 10);
  ddw[2] = 0.5 * (-18 * t + 8);
  ddw[3] = 0.5 * (6 * t - 2);
}

}  // namespace

TabulatedGrid::TabulatedGrid(int dim, int n, int components, std::vector<double> values)
    : dim_(dim), n_(n), comps_(components), data_(std::move(values)) {
  if (dim < 2 || dim > kMaxDim) fail(ErrorKind::Validation, "tabulated grid: dimension must be in [2, 4]");
  if (n < 4) fail(ErrorKind::Validation, "tabulated grid: need at least 4 points per axis");
  std::size_t expect = static_cast<std::size_t>(comps_);
  for (int k = 0; k < dim; ++k) expect *= static_cast<std::size_t>(n);
  if (data_.size() != expect)
    fail(ErrorKind::Validation, "tabulated grid: expected " + std::to_string(expect) + " values, got " +
                                    std::to_string(data_.size()));
}

TabulatedGrid TabulatedGrid::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Validation, "cannot open tabulated field file '" + path + "'");
  std::vector<double> nums;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    double v;
    while (ls >> v) nums.push_back(v);
    if (!ls.eof()) fail(ErrorKind::Validation, "tabulated field file '" + path + "': non-numeric token");
  }
  if (nums.size() < 3) fail(ErrorKind::Validation, "tabulated field file '" + path + "': missing header");
  const int dim = static_cast<int>(nums[0]), n = static_cast<int>(nums[1]), c = static_cast<int>(nums[2]);
  return TabulatedGrid(dim, n, c, std::vector<double>(nums.begin() + 3, nums.end()));
}

void TabulatedGrid::eval(const Vec& z, double* val, double* grad, double* hess) const {
  const double h = 2.0 / (n_ - 1);
  int base[kMaxDim];
  double w[kMaxDim][4], dw[kMaxDim][4], ddw[kMaxDim][4];
  for (int k = 0; k < dim_; ++k) {
    const double s = (z(k) + 1.0) / h;
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 1, n_ - 3);
    cr_weights(s - i, w[k], dw[k], ddw[k]);
    for (int m = 0; m < 4; ++m) {
      dw[k][m] /= h;
      ddw[k][m] /= h * h;
    }
    base[k] = i - 1;
  }
  for (int c = 0; c < comps_; ++c) {
    val[c] = 0.0;
    if (grad)
      for (int k = 0; k < dim_; ++k) grad[c * dim_ + k] = 0.0;
    if (hess)
      for (int k = 0; k < dim_ * dim_; ++k) hess[c * dim_ * dim_ + k] = 0.0;
  }
  int total = 1;
  for (int k = 0; k < dim_; ++k) total *= 4;
  for (int flat = 0; flat < total; ++flat) {
    int off[kMaxDim];
    int rem = flat;
    std::size_t idx = 0;
    for (int k = dim_ - 1; k >= 0; --k) {
      off[k] = rem % 4;
      rem /= 4;
    }
    for (int k = 0; k < dim_; ++k) idx = idx * n_ + static_cast<std::size_t>(base[k] + off[k]);
    double wt = 1.0;
    for (int k = 0; k < dim_; ++k) wt *= w[k][off[k]];
    const double* row = &data_[idx * comps_];
    for (int c = 0; c < comps_; ++c) val[c] += wt * row[c];
    if (grad) {
      for (int a = 0; a < dim_; ++a) {
        double g = 1.0;
        for (int k = 0; k < dim_; ++k) g *= (k == a ? dw[k][off[k]] : w[k][off[k]]);
        for (int c = 0; c < comps_; ++c) grad[c * dim_ + a] += g * row[c];
      }
    }
    if (hess) {
      for (int a = 0; a < dim_; ++a)
        for (int b = 0; b < dim_; ++b) {
          double g = 1.0;
          for (int k = 0; k < dim_; ++k) {
            if (a == b && k == a) g *= ddw[k][off[k]];
            else if (k == a || k == b) g *= dw[k][off[k]];
            else g *= w[k][off[k]];
          }
          for (int c = 0; c < comps_; ++c) hess[(c * dim_ + a) * dim_ + b] += g * row[c];
        }
    }
  }
}

TensorFieldPtr make_tensor_field(const std::string& spec, int dim) {
  const NameParam np = split(spec);
  if (np.name == "zero") return std::make_shared<ZeroTensor>(dim);
  if (np.name == "iso") return std::make_shared<IsoTensor>(dim, np.param);
  if (np.name == "bump") return std::make_shared<BumpTensor>(dim, np.param);
  if (np.name == "file") {
    TabulatedGrid g = TabulatedGrid::load(np.raw);
    if (g.dim() != dim || g.components() != dim * dim)
      fail(ErrorKind::Validation, "tensor file '" + np.raw + "': expected dim " + std::to_string(dim) +
                                      " with " + std::to_string(dim * dim) + " components");
    const auto& v = g.samples();
    for (std::size_t row = 0; row + dim * dim <= v.size(); row += dim * dim)
      for (int a = 0; a < dim; ++a)
        for (int b = a + 1; b < dim; ++b)
          if (std::abs(v[row + a * dim + b] - v[row + b * dim + a]) > 1e-12 * (1.0 + std::abs(v[row + a * dim + b])))
            fail(ErrorKind::Validation, "tensor file '" + np.raw + "': samples are not symmetric");
    return std::make_shared<TabulatedTensor>(g, np.raw);
  }
  fail(ErrorKind::Validation, "unknown tensor field '" + spec + "'");
}

ScalarFieldPtr make_scalar_field(const std::string& spec, int dim) {
  const NameParam np = split(spec);
  if (np.name == "zero") return std::make_shared<ZeroScalar>();
  if (np.name == "const")
    return std::make_shared<FormulaScalar>(FormulaScalar::Kind::Const, np.param, spec);
  if (np.name == "radial")
    return std::make_shared<FormulaScalar>(FormulaScalar::Kind::Radial, np.param, spec);
  if (np.name == "gauss")
    return std::make_shared<FormulaScalar>(FormulaScalar::Kind::Gauss, np.param, spec);
  if (np.name == "file") {
    TabulatedGrid g = TabulatedGrid::load(np.raw);
    if (g.dim() != dim || g.components() != 1)
      fail(ErrorKind::Validation, "potential file '" + np.raw + "': expected dim " + std::to_string(dim) +
                                      " with 1 component");
    return std::make_shared<TabulatedScalar>(g, np.raw);
  }
  fail(ErrorKind::Validation, "unknown potential field '" + spec + "'");
}

std::vector<std::string> tensor_field_names() { return {"zero", "iso:<eps>", "bump:<eps>", "file:<path>"}; }
std::vector<std::string> scalar_field_names() {
  return {"zero", "const:<c>", "radial:<c>", "gauss:<c>", "file:<path>"};
}

}  // namespace rl

#pragma once

// Perturbation tensors H and potentials W on the closed ball.
//
// Fields are named: "zero", "iso:<eps>", "bump:<eps>" for tensors and
// "zero", "const:<c>", "radial:<c>", "gauss:<c>" for potentials, or
// "file:<path>" for a tabulated grid. Tabulated files are plain text:
//
//   # comments allowed anywhere
//   <dim> <N> <components>
//   <N^dim rows of `components` values>
//
// The grid is uniform on [-1,1]^dim with N points per axis; rows are in
// row-major order (last axis fastest). A tensor row lists all dim*dim entries
// (row-major) and must be symmetric; a potential row has one value.

#include <memory>
#include <string>
#include <vector>

#include "rl/types.hpp"

namespace rl {

/// Value and derivatives of a symmetric tensor field at one point.
struct TensorJet {
  Mat value;
  Mat d[kMaxDim];             // d[k] = dH/dz_k
  Mat dd[kMaxDim][kMaxDim];   // dd[k][l] = d2H/dz_k dz_l
};

class TensorField {
 public:
  virtual ~TensorField() = default;
  virtual TensorJet jet(const Vec& z) const = 0;
  virtual bool is_zero() const { return false; }
  /// True when H(Rz) = R H(z) R^T for all rotations R.
  virtual bool isotropic() const { return false; }
  virtual std::string name() const = 0;
};

class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual double value(const Vec& z) const = 0;
  virtual bool is_zero() const { return false; }
  virtual bool isotropic() const { return false; }
  virtual std::string name() const = 0;
};

using TensorFieldPtr = std::shared_ptr<const TensorField>;
using ScalarFieldPtr = std::shared_ptr<const ScalarField>;

/// Looks up a tensor field by registry name; throws Validation if unknown.
TensorFieldPtr make_tensor_field(const std::string& spec, int dim);
ScalarFieldPtr make_scalar_field(const std::string& spec, int dim);

/// Registry names understood by make_tensor_field / make_scalar_field.
std::vector<std::string> tensor_field_names();
std::vector<std::string> scalar_field_names();

/// Uniform tabulated grid on [-1,1]^dim with Catmull-Rom tensor cubic interpolation.
class TabulatedGrid {
 public:
  TabulatedGrid(int dim, int n, int components, std::vector<double> values);
  static TabulatedGrid load(const std::string& path);

  int dim() const { return dim_; }
  int points() const { return n_; }
  int components() const { return comps_; }
  const std::vector<double>& samples() const { return data_; }

  /// Interpolated component values plus first and second derivatives.
  void eval(const Vec& z, double* val, double* grad, double* hess) const;

 private:
  int dim_, n_, comps_;
  std::vector<double> data_;
};

}  // namespace rl

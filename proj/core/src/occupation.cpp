#include "sbe/occupation.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sbe {

double OccupationMeasure::total_mass() const {
  double sum = 0.0, comp = 0.0;
  for (const double w : weights) {
    const double t = sum + w;
    comp += std::abs(sum) >= std::abs(w) ? (sum - t) + w : (w - t) + sum;
    sum = t;
  }
  return sum + comp;
}

void OccupationMeasure::validate() const {
  if (dim < 1) throw std::invalid_argument("measure dimension must be >= 1");
  if (atoms.size() != weights.size() * static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("atom array size does not match weights * dim");
  }
  for (const double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("weights must be strictly positive and finite");
    }
  }
  for (const double x : atoms) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument("atoms must be finite");
    }
  }
}

OccupationMeasure occupation(const SampledPath& path, double s, double t) {
  path.validate();
  if (!(s < t)) {
    throw std::invalid_argument("occupation window must satisfy s < t");
  }
  if (s < path.span_start() || t > path.span_end()) {
    throw std::invalid_argument("occupation window leaves the path span");
  }
  OccupationMeasure mu;
  mu.dim = path.dim;
  mu.span_start = s;
  mu.span_end = t;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double lo = std::max(path.times[i], s);
    const double hi = std::min(path.times[i + 1], t);
    const double w = hi - lo;
    if (w > 0.0) {
      const auto p = path.point(i);
      mu.atoms.insert(mu.atoms.end(), p.begin(), p.end());
      mu.weights.push_back(w);
    }
  }
  return mu;
}

OccupationMeasure translate(const OccupationMeasure& mu,
                            std::span<const double> shift) {
  if (shift.size() != static_cast<std::size_t>(mu.dim)) {
    throw std::invalid_argument("translation vector dimension mismatch");
  }
  OccupationMeasure out = mu;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (int c = 0; c < mu.dim; ++c) {
      out.atoms[i * static_cast<std::size_t>(mu.dim) +
                static_cast<std::size_t>(c)] +=
          shift[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

std::complex<double> fourier_occupation(const OccupationMeasure& mu,
                                        std::span<const double> xi) {
  if (xi.size() != static_cast<std::size_t>(mu.dim)) {
    throw std::invalid_argument("frequency vector dimension mismatch");
  }
  std::complex<double> sum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double phase = 0.0;
    for (int c = 0; c < mu.dim; ++c) {
      phase += xi[static_cast<std::size_t>(c)] * mu.coord(i, c);
    }
    sum += mu.weights[i] * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return sum;
}

bool ball_contains(std::span<const double> atom, std::span<const double> center,
                   double r) {
  if (atom.size() == 1) {
    const double d = atom[0] - center[0];
    return d >= -r && d <= r;
  }
  double s = 0.0;
  for (std::size_t c = 0; c < atom.size(); ++c) {
    const double dc = atom[c] - center[c];
    s += dc * dc;
  }
  return s <= r * r;
}

SmallBallIndex::SmallBallIndex(const OccupationMeasure& mu)
    : dim_(mu.dim), count_(mu.size()) {
  mu.validate();
  base_exp_ = 0;
  bool first = true;
  for (const double w : mu.weights) {
    const int e = exact::decompose(w).lsb_exp;
    base_exp_ = first ? e : std::min(base_exp_, e);
    first = false;
  }

  if (dim_ == 1) {
    std::vector<std::size_t> order(count_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return mu.atoms[a] < mu.atoms[b];
    });
    sorted_coord_.resize(count_);
    sorted_weight_.resize(count_);
    for (std::size_t i = 0; i < count_; ++i) {
      sorted_coord_[i] = mu.atoms[order[i]];
      sorted_weight_[i] = mu.weights[order[i]];
    }
    prefix_ = ExactPrefixSums(sorted_weight_);
    return;
  }

  atoms_ = mu.atoms;
  weights_ = mu.weights;
  const std::size_t d = static_cast<std::size_t>(dim_);
  box_min_.assign(d, 0.0);
  std::vector<double> box_max(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    box_min_[c] = std::numeric_limits<double>::infinity();
    box_max[c] = -std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = 0; i < count_; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      box_min_[c] = std::min(box_min_[c], atoms_[i * d + c]);
      box_max[c] = std::max(box_max[c], atoms_[i * d + c]);
    }
  }
  if (count_ == 0) {
    box_min_.assign(d, 0.0);
    box_max.assign(d, 0.0);
  }

  const int per_axis = std::clamp(
      static_cast<int>(std::floor(std::pow(static_cast<double>(
                                               std::max<std::size_t>(count_, 1)),
                                           1.0 / static_cast<double>(dim_)))),
      1, 64);
  cells_per_axis_.assign(d, per_axis);
  cell_width_.assign(d, 0.0);
  std::size_t total_cells = 1;
  for (std::size_t c = 0; c < d; ++c) {
    const double extent = box_max[c] - box_min_[c];
    if (!(extent > 0.0)) cells_per_axis_[c] = 1;
    cell_width_[c] = extent > 0.0
                         ? extent / static_cast<double>(cells_per_axis_[c])
                         : 0.0;
    total_cells *= static_cast<std::size_t>(cells_per_axis_[c]);
  }

  auto cell_of = [&](std::size_t i) {
    std::size_t id = 0;
    for (std::size_t c = 0; c < d; ++c) {
      int cc = 0;
      if (cell_width_[c] > 0.0) {
        cc = static_cast<int>((atoms_[i * d + c] - box_min_[c]) /
                              cell_width_[c]);
        cc = std::clamp(cc, 0, cells_per_axis_[c] - 1);
      }
      id = id * static_cast<std::size_t>(cells_per_axis_[c]) +
           static_cast<std::size_t>(cc);
    }
    return id;
  };

  cell_offset_.assign(total_cells + 1, 0);
  for (std::size_t i = 0; i < count_; ++i) cell_offset_[cell_of(i) + 1] += 1;
  for (std::size_t k = 0; k < total_cells; ++k) {
    cell_offset_[k + 1] += cell_offset_[k];
  }
  cell_atoms_.resize(count_);
  std::vector<std::size_t> cursor(cell_offset_.begin(), cell_offset_.end() - 1);
  for (std::size_t i = 0; i < count_; ++i) {
    cell_atoms_[cursor[cell_of(i)]++] = i;
  }
}

double SmallBallIndex::query_1d(double r, double y) const {
  const auto first = std::partition_point(
      sorted_coord_.begin(), sorted_coord_.end(),
      [&](double x) { return x - y < -r; });
  const auto last = std::partition_point(
      first, sorted_coord_.end(), [&](double x) { return x - y <= r; });
  const std::size_t i = static_cast<std::size_t>(first - sorted_coord_.begin());
  const std::size_t j = static_cast<std::size_t>(last - sorted_coord_.begin());
  return prefix_.range_sum(i, j);
}

double SmallBallIndex::query_nd(double r, std::span<const double> y) const {
  const std::size_t d = static_cast<std::size_t>(dim_);
  std::uint64_t buf[exact::kMaxLimbs];
  std::memset(buf, 0, sizeof(buf));
  std::span<std::uint64_t> acc(buf, exact::kMaxLimbs);

  // Conservative candidate window: one extra cell per side dwarfs any
  // rounding in the cell arithmetic.
  std::vector<int> lo(d, 0), hi(d, 0), cur(d, 0);
  for (std::size_t c = 0; c < d; ++c) {
    const int nc = cells_per_axis_[c];
    if (nc == 1 || cell_width_[c] <= 0.0) {
      lo[c] = hi[c] = 0;
      continue;
    }
    const double fl = std::floor((y[c] - r - box_min_[c]) / cell_width_[c]) - 1.0;
    const double fh = std::floor((y[c] + r - box_min_[c]) / cell_width_[c]) + 1.0;
    if (fh < 0.0 || fl > static_cast<double>(nc - 1)) {
      return 0.0;  // window entirely outside the bounding box
    }
    lo[c] = fl <= 0.0 ? 0 : static_cast<int>(std::min(fl, double(nc - 1)));
    hi[c] = fh >= static_cast<double>(nc - 1) ? nc - 1 : static_cast<int>(fh);
  }

  cur = lo;
  while (true) {
    std::size_t id = 0;
    for (std::size_t c = 0; c < d; ++c) {
      id = id * static_cast<std::size_t>(cells_per_axis_[c]) +
           static_cast<std::size_t>(cur[c]);
    }
    for (std::size_t k = cell_offset_[id]; k < cell_offset_[id + 1]; ++k) {
      const std::size_t i = cell_atoms_[k];
      if (ball_contains({atoms_.data() + i * d, d}, y, r)) {
        exact::accumulate(acc, base_exp_, exact::decompose(weights_[i]));
      }
    }
    std::size_t c = d;
    while (c > 0) {
      --c;
      if (cur[c] < hi[c]) {
        ++cur[c];
        for (std::size_t c2 = c + 1; c2 < d; ++c2) cur[c2] = lo[c2];
        break;
      }
      if (c == 0) return exact::round_to_double(acc, base_exp_);
    }
  }
}

double SmallBallIndex::query(double r, std::span<const double> y) const {
  if (y.size() != static_cast<std::size_t>(dim_)) {
    throw std::invalid_argument("query center dimension mismatch");
  }
  if (!(r >= 0.0)) {
    assert(!(r < 0.0) && "negative ball radius");
    return 0.0;
  }
  if (count_ == 0) return 0.0;
  if (dim_ == 1) return query_1d(r, y[0]);
  return query_nd(r, y);
}

double small_ball(const SmallBallIndex& idx, double r,
                  std::span<const double> y) {
  return idx.query(r, y);
}

double small_ball(const SmallBallIndex& idx, double r, double y) {
  return idx.query(r, std::span<const double>(&y, 1));
}

}  // namespace sbe

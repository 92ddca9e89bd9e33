#include "earlystop/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace earlystop {

namespace {

constexpr double kWeightSumTol = 1e-12;

void check_dimension_match(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2) {
  if (mu1.dimension() != mu2.dimension()) {
    throw std::invalid_argument("measure dimensions differ: " + std::to_string(mu1.dimension()) +
                                " vs " + std::to_string(mu2.dimension()));
  }
}

void check_order(double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("wasserstein order p must be >= 1");
}

double transport_cost(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double p) {
  const double d = (a - b).norm();
  if (p == 1.0) return d;
  if (p == 2.0) return d * d;
  return std::pow(d, p);
}

double root_of_cost(double total, double p) {
  if (total <= 0.0) return 0.0;
  if (p == 1.0) return total;
  if (p == 2.0) return std::sqrt(total);
  return std::pow(total, 1.0 / p);
}

// Dense transportation simplex. Northwest-corner start, steepest entering
// cell, spanning-tree pivots. Sizes here stay small (supports are merged or
// already tiny), so everything is kept dense and recomputed per pivot.
class TransportSimplex {
 public:
  TransportSimplex(Eigen::MatrixXd cost, std::vector<double> supply, std::vector<double> demand)
      : cost_(std::move(cost)),
        supply_(std::move(supply)),
        demand_(std::move(demand)),
        rows_(static_cast<int>(supply_.size())),
        cols_(static_cast<int>(demand_.size())),
        in_basis_(Eigen::MatrixXi::Zero(rows_, cols_)) {}

  void solve() {
    northwest_corner();
    const double tol = 1e-12 * (1.0 + cost_.cwiseAbs().maxCoeff());
    const long max_pivots = 10000 + 200L * rows_ * cols_;
    for (long pivot = 0; pivot < max_pivots; ++pivot) {
      if (objective() == 0.0) return;  // costs are nonnegative, so zero is optimal
      std::vector<double> u, v;
      compute_duals(u, v);
      int ei = -1, ej = -1;
      double best = -tol;
      for (int i = 0; i < rows_; ++i) {
        for (int j = 0; j < cols_; ++j) {
          if (in_basis_(i, j)) continue;
          const double reduced = cost_(i, j) - u[i] - v[j];
          if (reduced < best) {
            best = reduced;
            ei = i;
            ej = j;
          }
        }
      }
      if (ei < 0) return;
      pivot_on(ei, ej);
    }
    throw std::runtime_error("transportation simplex failed to converge");
  }

  double objective() const {
    double total = 0.0;
    for (const Cell& c : basis_) total += c.flow * cost_(c.i, c.j);
    return total;
  }

  Eigen::MatrixXd plan() const {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(rows_, cols_);
    for (const Cell& c : basis_) p(c.i, c.j) += c.flow;
    return p;
  }

 private:
  struct Cell {
    int i, j;
    double flow;
  };

  // Exactly rows + cols - 1 basic cells; ties leave degenerate zero flows.
  void northwest_corner() {
    std::vector<double> a = supply_, b = demand_;
    int i = 0, j = 0;
    for (int step = 0; step < rows_ + cols_ - 1; ++step) {
      const double f = std::max(0.0, std::min(a[i], b[j]));
      basis_.push_back({i, j, f});
      in_basis_(i, j) = 1;
      a[i] -= f;
      b[j] -= f;
      if (i == rows_ - 1 && j == cols_ - 1) break;
      if (i == rows_ - 1) {
        ++j;
      } else if (j == cols_ - 1) {
        ++i;
      } else if (a[i] <= b[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  // Node ids: rows 0..rows-1, columns rows_..rows_+cols_-1.
  std::vector<std::vector<std::pair<int, int>>> adjacency() const {
    std::vector<std::vector<std::pair<int, int>>> adj(rows_ + cols_);
    for (int k = 0; k < static_cast<int>(basis_.size()); ++k) {
      const Cell& c = basis_[k];
      adj[c.i].push_back({rows_ + c.j, k});
      adj[rows_ + c.j].push_back({c.i, k});
    }
    return adj;
  }

  void compute_duals(std::vector<double>& u, std::vector<double>& v) const {
    u.assign(rows_, 0.0);
    v.assign(cols_, 0.0);
    std::vector<char> seen(rows_ + cols_, 0);
    const auto adj = adjacency();
    std::deque<int> queue{0};
    seen[0] = 1;
    while (!queue.empty()) {
      const int node = queue.front();
      queue.pop_front();
      for (const auto& [next, k] : adj[node]) {
        if (seen[next]) continue;
        seen[next] = 1;
        const Cell& c = basis_[k];
        if (next >= rows_) {
          v[next - rows_] = cost_(c.i, c.j) - u[c.i];
        } else {
          u[next] = cost_(c.i, c.j) - v[c.j];
        }
        queue.push_back(next);
      }
    }
  }

  void pivot_on(int ei, int ej) {
    // Unique tree path from the entering cell's row to its column.
    const auto adj = adjacency();
    const int start = ei, goal = rows_ + ej;
    std::vector<int> parent_node(rows_ + cols_, -1), parent_cell(rows_ + cols_, -1);
    std::vector<char> seen(rows_ + cols_, 0);
    std::deque<int> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const int node = queue.front();
      queue.pop_front();
      if (node == goal) break;
      for (const auto& [next, k] : adj[node]) {
        if (seen[next]) continue;
        seen[next] = 1;
        parent_node[next] = node;
        parent_cell[next] = k;
        queue.push_back(next);
      }
    }
    std::vector<int> path;  // basis cell indices from the row end to the column end
    for (int node = goal; node != start; node = parent_node[node]) path.push_back(parent_cell[node]);
    std::reverse(path.begin(), path.end());

    // Walking the cycle from the entering (+) cell, odd positions give up flow.
    double theta = std::numeric_limits<double>::infinity();
    int leaving = -1;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      if (basis_[path[k]].flow < theta) {
        theta = basis_[path[k]].flow;
        leaving = path[k];
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      Cell& c = basis_[path[k]];
      c.flow += (k % 2 == 0) ? -theta : theta;
      if (c.flow < 0.0) c.flow = 0.0;
    }
    in_basis_(basis_[leaving].i, basis_[leaving].j) = 0;
    basis_[leaving] = {ei, ej, theta};
    in_basis_(ei, ej) = 1;
  }

  Eigen::MatrixXd cost_;
  std::vector<double> supply_, demand_;
  int rows_, cols_;
  Eigen::MatrixXi in_basis_;
  std::vector<Cell> basis_;
};

Eigen::MatrixXd cost_matrix(const std::vector<Eigen::VectorXd>& xs,
                            const std::vector<Eigen::VectorXd>& ys, double p) {
  Eigen::MatrixXd c(xs.size(), ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          transport_cost(xs[i], ys[j], p);
  return c;
}

// Collapse bitwise-equal support points; the transport value is unchanged and
// resampled measures shrink from n atoms back to their distinct values.
std::pair<std::vector<Eigen::VectorXd>, std::vector<double>> merge_support(
    const EmpiricalMeasure& mu) {
  std::map<std::vector<double>, double> grouped;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Eigen::VectorXd& pt = mu.point(i);
    std::vector<double> key(pt.data(), pt.data() + pt.size());
    grouped[key] += mu.weight(i);
  }
  std::vector<Eigen::VectorXd> points;
  std::vector<double> weights;
  points.reserve(grouped.size());
  weights.reserve(grouped.size());
  for (const auto& [key, w] : grouped) {
    points.push_back(Eigen::Map<const Eigen::VectorXd>(key.data(), static_cast<Eigen::Index>(key.size())));
    weights.push_back(w);
  }
  return {std::move(points), std::move(weights)};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::vector<Eigen::VectorXd> points,
                                   std::vector<double> weights) {
  if (points.empty()) throw std::invalid_argument("empirical measure needs a nonempty support");
  if (points.size() != weights.size())
    throw std::invalid_argument("points/weights size mismatch");
  const Eigen::Index q = points.front().size();
  if (q < 1) throw std::invalid_argument("support points must have dimension >= 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != q) throw std::invalid_argument("support points have mixed dimensions");
    if (!points[i].allFinite()) throw std::invalid_argument("support points must be finite");
    if (!(weights[i] >= 0.0)) throw std::invalid_argument("weights must be nonnegative");
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > kWeightSumTol)
    throw std::invalid_argument("weights must sum to 1 (got " + std::to_string(sum) + ")");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (weights[i] == 0.0) continue;
    points_.push_back(std::move(points[i]));
    weights_.push_back(weights[i]);
  }
  if (points_.empty()) throw std::invalid_argument("all atoms have zero weight");
}

EmpiricalMeasure EmpiricalMeasure::uniform(std::vector<Eigen::VectorXd> points) {
  const std::size_t n = points.size();
  const double w = 1.0 / static_cast<double>(n);
  return EmpiricalMeasure(std::move(points), std::vector<double>(n, w));
}

EmpiricalMeasure EmpiricalMeasure::dirac(const Eigen::VectorXd& point) {
  return EmpiricalMeasure({point}, {1.0});
}

EmpiricalMeasure EmpiricalMeasure::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open measure CSV: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw std::runtime_error("measure CSV is empty: " + path);

  bool has_header = false;
  for (const std::string& f : rows.front()) {
    double ignored;
    if (!parse_double(f, ignored)) {
      has_header = true;
      break;
    }
  }
  bool has_weight = false;
  if (has_header) {
    has_weight = trim(rows.front().back()) == "weight";
    rows.erase(rows.begin());
    if (rows.empty()) throw std::runtime_error("measure CSV has a header but no atoms: " + path);
  }

  const std::size_t fields = rows.front().size();
  const std::size_t q = has_weight ? fields - 1 : fields;
  if (q < 1) throw std::runtime_error("measure CSV needs at least one coordinate column");
  std::vector<Eigen::VectorXd> points;
  std::vector<double> weights;
  for (const auto& row : rows) {
    if (row.size() != fields)
      throw std::runtime_error("measure CSV has ragged rows: " + path);
    Eigen::VectorXd pt(static_cast<Eigen::Index>(q));
    for (std::size_t k = 0; k < q; ++k) {
      if (!parse_double(row[k], pt[static_cast<Eigen::Index>(k)]))
        throw std::runtime_error("measure CSV has a non-numeric coordinate: " + row[k]);
    }
    points.push_back(std::move(pt));
    if (has_weight) {
      double w;
      if (!parse_double(row.back(), w))
        throw std::runtime_error("measure CSV has a non-numeric weight: " + row.back());
      weights.push_back(w);
    }
  }
  if (!has_weight) return uniform(std::move(points));
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::runtime_error("measure CSV has a negative weight");
    sum += w;
  }
  if (!(sum > 0.0)) throw std::runtime_error("measure CSV weights sum to zero");
  for (double& w : weights) w /= sum;
  return EmpiricalMeasure(std::move(points), std::move(weights));
}

void EmpiricalMeasure::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write measure CSV: " + path);
  for (Eigen::Index k = 0; k < dimension(); ++k) out << "x" << k << ",";
  out << "weight\n";
  char buf[64];
  for (std::size_t i = 0; i < size(); ++i) {
    for (Eigen::Index k = 0; k < dimension(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", points_[i][k]);
      out << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", weights_[i]);
    out << buf << "\n";
  }
}

Eigen::VectorXd EmpiricalMeasure::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(dimension());
  for (std::size_t i = 0; i < size(); ++i) m += weights_[i] * points_[i];
  return m;
}

double coupling_marginal_error(const Coupling& coupling, const EmpiricalMeasure& mu1,
                               const EmpiricalMeasure& mu2) {
  const Eigen::MatrixXd& g = coupling.plan;
  if (g.rows() != static_cast<Eigen::Index>(mu1.size()) ||
      g.cols() != static_cast<Eigen::Index>(mu2.size()))
    throw std::invalid_argument("coupling shape does not match the measures");
  double err = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    err = std::max(err, std::abs(g.row(i).sum() - mu1.weight(static_cast<std::size_t>(i))));
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    err = std::max(err, std::abs(g.col(j).sum() - mu2.weight(static_cast<std::size_t>(j))));
  return err;
}

double wasserstein(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double p) {
  check_dimension_match(mu1, mu2);
  check_order(p);
  const auto [pts1, w1] = merge_support(mu1);
  const auto [pts2, w2] = merge_support(mu2);
  TransportSimplex lp(cost_matrix(pts1, pts2, p), w1, w2);
  lp.solve();
  return root_of_cost(lp.objective(), p);
}

Coupling optimal_coupling(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double p) {
  check_dimension_match(mu1, mu2);
  check_order(p);
  TransportSimplex lp(cost_matrix(mu1.points(), mu2.points(), p), mu1.weights(), mu2.weights());
  lp.solve();
  return Coupling{lp.plan()};
}

EmpiricalMeasure sample_empirical(const EmpiricalMeasure& mu, std::size_t n, RngStream& rng) {
  if (n == 0) throw std::invalid_argument("sample size must be positive");
  std::vector<double> cumulative(mu.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    acc += mu.weight(i);
    cumulative[i] = acc;
  }
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.next_double() * acc;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const std::size_t idx = std::min(mu.size() - 1,
                                     static_cast<std::size_t>(it - cumulative.begin()));
    draws.push_back(mu.point(idx));
  }
  return EmpiricalMeasure::uniform(std::move(draws));
}

double third_moment(const EmpiricalMeasure& mu) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double n = mu.point(i).norm();
    acc += mu.weight(i) * n * n * n;
  }
  return std::cbrt(acc);
}

double dereich_bound(double kappa_d, double j_moment, std::size_t n, int d) {
  if (d < 3) throw std::invalid_argument("the moment bound requires dimension d >= 3");
  if (!(kappa_d > 0.0)) throw std::invalid_argument("kappa_d must be positive");
  if (j_moment < 0.0) throw std::invalid_argument("third moment must be nonnegative");
  if (n == 0) throw std::invalid_argument("sample size must be positive");
  return kappa_d * j_moment * std::pow(static_cast<double>(n), -3.0 / static_cast<double>(d));
}

double discrete_support_bound(std::size_t m_support, std::size_t n) {
  if (m_support == 0 || n == 0)
    throw std::invalid_argument("support size and sample size must be positive");
  return 84.0 * std::sqrt(static_cast<double>(m_support) / static_cast<double>(n));
}

}  // namespace earlystop

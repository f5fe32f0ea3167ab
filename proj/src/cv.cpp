#include "vifreg/cv.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

#include "vifreg/errors.hpp"
#include "vifreg/rng.hpp"

namespace vifreg {

namespace {

// Runs body(0..count-1) on a small worker pool. Every iteration owns its
// output slot and derives its own seed from its index, so the result is
// identical whatever the scheduling (and to a plain loop on one core).
// The first failing index's exception is rethrown after the join.
void run_indexed(int count, const std::function<void(int)>& body) {
  const unsigned hw = std::thread::hardware_concurrency();
  const int workers =
      std::max(1, std::min<int>(static_cast<int>(hw == 0 ? 1 : hw), count));
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

Dataset subset_rows(const Dataset& d, const std::vector<int>& rows) {
  Dataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), d.p());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = d.X.row(rows[i]);
    out.y[static_cast<Eigen::Index>(i)] = d.y[rows[i]];
  }
  out.names = d.names;
  out.response_name = d.response_name;
  return out;
}

}  // namespace

std::vector<int> fold_assignment(int n, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation: folds must be >= 2");
  if (folds > n) throw ConfigError("cross-validation: folds exceed row count");
  Rng rng(derive_seed(seed, 0x0f01d5ULL));
  const std::vector<int> perm = rng.permutation(n);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = i % folds;
  }
  return fold;
}

CvReport cross_validate(const Dataset& raw, Method method, const CvSpec& cv,
                        const SelectionOptions& opt, StandardizeMode mode) {
  const auto t_start = std::chrono::steady_clock::now();
  const int n = raw.n();
  const std::vector<int> fold = fold_assignment(n, cv.folds, cv.seed);

  CvReport rep;
  rep.method = method;
  rep.fold_metric.resize(static_cast<std::size_t>(cv.folds));

  // Folds are independent given the precomputed assignment, so they run on
  // the worker pool; each writes only its own metric slot.
  run_indexed(cv.folds, [&](int f) {
    std::vector<int> train_rows, test_rows;
    for (int i = 0; i < n; ++i) {
      (fold[static_cast<std::size_t>(i)] == f ? test_rows : train_rows)
          .push_back(i);
    }
    const Dataset train = subset_rows(raw, train_rows);
    const Dataset held_out = subset_rows(raw, test_rows);

    StandardizedData st = standardize(train, mode);
    SelectionOptions o = opt;
    o.method = method;
    o.seed = derive_seed(opt.seed, 0xcf0000ULL + static_cast<std::uint64_t>(f));
    const SelectionResult sel = run_selection(st.data.X, st.data.y, o);

    // Predict the held-out rows on the raw scale.
    const Vector beta_raw =
        raw_coefficients(st.transform, sel.selected, sel.beta, train.p());
    const Vector pred =
        (held_out.X * beta_raw.tail(held_out.p())).array() + beta_raw[0];
    const Vector err = held_out.y - pred;

    if (cv.metric == CvSpec::Metric::MAPE) {
      std::vector<double> abs_err(err.size());
      for (Eigen::Index i = 0; i < err.size(); ++i) abs_err[static_cast<std::size_t>(i)] = std::abs(err[i]);
      rep.fold_metric[static_cast<std::size_t>(f)] = median_of(std::move(abs_err));
    } else {
      rep.fold_metric[static_cast<std::size_t>(f)] =
          err.squaredNorm() / static_cast<double>(err.size());
    }
  });

  rep.mean_metric = 0.0;
  for (double v : rep.fold_metric) rep.mean_metric += v;
  rep.mean_metric /= static_cast<double>(rep.fold_metric.size());
  rep.median_metric = median_of(rep.fold_metric);

  // Full-data fit for the coefficient table.
  StandardizedData st_full = standardize(raw, mode);
  SelectionOptions o = opt;
  o.method = method;
  rep.full_fit = run_selection(st_full.data.X, st_full.data.y, o);
  for (int s : rep.full_fit.selected) {
    rep.selected_names.push_back(st_full.data.names[static_cast<std::size_t>(s)]);
  }

  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return rep;
}

StabilityReport order_stability(const Dataset& raw, Method method, int n_orders,
                                std::uint64_t seed, const SelectionOptions& opt,
                                StandardizeMode mode) {
  if (n_orders < 1) throw ConfigError("order_stability: n_orders must be >= 1");
  StabilityReport rep;
  rep.n_orders = n_orders;

  StandardizedData st = standardize(raw, mode);
  const int p = st.data.p();
  for (const std::string& nm : st.data.names) rep.selection_frequency[nm] = 0;

  // Each re-order runs independently on the pool; the tallies are merged
  // afterwards in index order so the report never depends on scheduling.
  std::vector<std::vector<int>> picked(static_cast<std::size_t>(n_orders));
  run_indexed(n_orders, [&](int o) {
    Rng order_rng(derive_seed(seed, 0x08de8ULL + static_cast<std::uint64_t>(o)));
    const std::vector<int> perm = order_rng.permutation(p);
    Matrix Xp(st.data.X.rows(), p);
    for (int j = 0; j < p; ++j) {
      Xp.col(j) = st.data.X.col(perm[static_cast<std::size_t>(j)]);
    }
    SelectionOptions so = opt;
    so.method = method;
    so.seed = derive_seed(seed, 0x5e1ecU + static_cast<std::uint64_t>(o));
    const SelectionResult sel = run_selection(Xp, st.data.y, so);

    std::vector<int>& mine = picked[static_cast<std::size_t>(o)];
    for (int s : sel.selected) {
      mine.push_back(perm[static_cast<std::size_t>(s)]);
    }
  });
  for (const std::vector<int>& sel : picked) {
    rep.size_histogram[static_cast<int>(sel.size())] += 1;
    for (int orig : sel) {
      rep.selection_frequency[st.data.names[static_cast<std::size_t>(orig)]] += 1;
    }
  }
  return rep;
}

}  // namespace vifreg

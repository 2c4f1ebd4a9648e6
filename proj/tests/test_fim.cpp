#include <doctest.h>

#include <random>

#include "fimsel/fim.hpp"
#include "oracles.hpp"

using namespace fimsel;

namespace {

JacobianBlocks dense_blocks(const MatX& j) {
  JacobianBlocks jb;
  jb.rows = static_cast<int>(j.rows());
  jb.dim = static_cast<int>(j.cols());
  jb.segments.push_back({0, j});
  return jb;
}

InfoAtom random_atom(std::mt19937_64& eng, int id, int p, int rank) {
  std::normal_distribution<double> g;
  MatX j(rank, p);
  for (int i = 0; i < rank; ++i)
    for (int k = 0; k < p; ++k) j(i, k) = g(eng);
  return InfoAtom(id, dense_blocks(j), MatX::Identity(rank, rank));
}

}  // namespace

TEST_CASE("info atom dense expansion") {
  SUBCASE("zero jacobian gives zero information") {
    InfoAtom a(0, dense_blocks(MatX::Zero(1, 5)), MatX::Identity(1, 1));
    CHECK(a.dense_information().cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("unit row against hand value") {
    MatX j = MatX::Zero(1, 4);
    j(0, 2) = 1.0;
    MatX noise(1, 1);
    noise << 0.25;  // sigma = 0.5 -> information 4 on the diagonal
    InfoAtom a(0, dense_blocks(j), noise);
    MatX q = a.dense_information();
    CHECK(q(2, 2) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(q.cwiseAbs().sum() == doctest::Approx(4.0).epsilon(1e-14));
  }

  SUBCASE("random atoms match the dense formula and stay PSD") {
    std::mt19937_64 eng(3);
    std::normal_distribution<double> g;
    for (int rep = 0; rep < 30; ++rep) {
      const int p = 6;
      const int r = 1 + rep % 2;
      MatX j(r, p);
      for (int i = 0; i < r; ++i)
        for (int k = 0; k < p; ++k) j(i, k) = g(eng);
      const MatX noise = oracle::random_spd(eng, r, 0.2, 3.0);
      InfoAtom a(rep, dense_blocks(j), noise);
      const MatX expect = j.transpose() * noise.inverse() * j;
      CHECK(oracle::rel_err(a.dense_information(), expect) < 1e-12);

      const MatX q = a.dense_information();
      CHECK((q - q.transpose()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<MatX> eig(q);
      CHECK(eig.eigenvalues().minCoeff() >
            -1e-10 * std::max(1.0, q.cwiseAbs().maxCoeff()));
    }
  }

  SUBCASE("bad noise covariance rejected") {
    MatX bad(1, 1);
    bad << -1.0;
    CHECK_THROWS_AS(InfoAtom(0, dense_blocks(MatX::Ones(1, 3)), bad),
                    NumericError);
    MatX asym(2, 2);
    asym << 1.0, 0.3, -0.3, 1.0;
    CHECK_THROWS_AS(InfoAtom(0, dense_blocks(MatX::Ones(2, 3)), asym),
                    NumericError);
  }
}

TEST_CASE("state initialization and logdet") {
  SUBCASE("identity base") {
    FimState s(MatX::Identity(7, 7));
    CHECK(s.logdet() == 0.0);
  }

  SUBCASE("scaled diagonal") {
    FimState s(MatX(2.0 * MatX::Identity(5, 5)));
    CHECK(s.logdet() == doctest::Approx(5.0 * std::log(2.0)).epsilon(1e-14));
  }

  SUBCASE("random SPD against eigenvalue oracle") {
    std::mt19937_64 eng(9);
    for (int rep = 0; rep < 20; ++rep) {
      const MatX base = oracle::random_spd(eng, 8, 0.1, 5.0);
      FimState s(base);
      Eigen::SelfAdjointEigenSolver<MatX> eig(base);
      const double expect = eig.eigenvalues().array().log().sum();
      CHECK(s.logdet() == doctest::Approx(expect).epsilon(1e-11));
    }
  }

  SUBCASE("non-SPD base rejected") {
    MatX indef = MatX::Identity(4, 4);
    indef(3, 3) = -2.0;
    CHECK_THROWS_AS(FimState{indef}, NumericError);
    MatX asym = MatX::Identity(4, 4);
    asym(0, 1) = 0.7;
    CHECK_THROWS_AS(FimState{asym}, NumericError);
  }
}

TEST_CASE("marginal gains") {
  SUBCASE("zero atom gains zero") {
    FimState s(MatX::Identity(5, 5));
    InfoAtom zero(0, dense_blocks(MatX::Zero(1, 5)), MatX::Identity(1, 1));
    CHECK(s.gain(zero) == 0.0);
  }

  SUBCASE("scalar case ln 2") {
    FimState s(MatX::Identity(1, 1));
    InfoAtom a(0, dense_blocks(MatX::Ones(1, 1)), MatX::Identity(1, 1));
    CHECK(s.gain(a) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }

  SUBCASE("random gains match the dense two-logdet oracle") {
    std::mt19937_64 eng(17);
    for (int rep = 0; rep < 50; ++rep) {
      const int p = 9;
      const MatX base = oracle::random_spd(eng, p, 0.2, 4.0);
      FimState s(base);
      InfoAtom a = random_atom(eng, 0, p, 1 + rep % 2);
      const double expect = oracle::logdet(base + a.dense_information()) -
                            oracle::logdet(base);
      CHECK(s.gain(a) == doctest::Approx(expect).epsilon(1e-9));
      CHECK(s.gain(a) >= -1e-12);
    }
  }
}

TEST_CASE("push maintains the factorization") {
  std::mt19937_64 eng(23);

  SUBCASE("logdet increases by exactly the reported gain") {
    const int p = 9;
    FimState s(oracle::random_spd(eng, p, 0.5, 2.0));
    for (int i = 0; i < 30; ++i) {
      InfoAtom a = random_atom(eng, i, p, 1 + i % 2);
      const double g = s.gain(a);
      const double before = s.logdet();
      s.push(a);
      CHECK(s.logdet() - before == doctest::Approx(g).epsilon(1e-12));
    }
  }

  SUBCASE("duplicate atom id rejected") {
    FimState s(MatX::Identity(4, 4));
    InfoAtom a = random_atom(eng, 7, 4, 1);
    s.push(a);
    CHECK_THROWS_AS(s.push(a), UsageError);
    CHECK(s.chosen() == std::vector<int>{7});
  }

  SUBCASE("incremental total and logdet track the dense sum across refactors") {
    const int p = 7;
    const MatX base = oracle::random_spd(eng, p, 0.5, 2.0);
    FimState s(base);
    std::vector<InfoAtom> atoms;
    for (int i = 0; i < 1000; ++i) {
      atoms.push_back(random_atom(eng, i, p, 1 + i % 2));
      // Scale down so the total stays well conditioned over 1000 pushes.
      InfoAtom scaled(i, dense_blocks(0.05 * atoms.back().whitened()),
                      MatX::Identity(atoms.back().rows(), atoms.back().rows()));
      atoms.back() = scaled;
      s.push(atoms.back());
      if (i % 97 == 0) {
        const MatX dense = information_sum(base, atoms);
        CHECK(oracle::rel_err(s.total(), dense) < 1e-12);
        CHECK(s.logdet() ==
              doctest::Approx(oracle::logdet(dense)).epsilon(1e-10));
      }
    }
    const MatX dense = information_sum(base, atoms);
    CHECK(std::abs(s.logdet() - oracle::logdet(dense)) < 1e-9 * p);
  }

  SUBCASE("push order does not change the state") {
    const int p = 6;
    const MatX base = oracle::random_spd(eng, p, 0.5, 2.0);
    std::vector<InfoAtom> atoms;
    for (int i = 0; i < 12; ++i) atoms.push_back(random_atom(eng, i, p, 1));
    FimState fwd(base), rev(base);
    for (int i = 0; i < 12; ++i) {
      fwd.push(atoms[i]);
      rev.push(atoms[11 - i]);
    }
    CHECK(oracle::rel_err(fwd.total(), rev.total()) < 1e-12);
    CHECK(fwd.logdet() == doctest::Approx(rev.logdet()).epsilon(1e-12));
  }
}

TEST_CASE("criterion report") {
  SUBCASE("empty selection is exactly neutral") {
    const MatX base = 3.0 * MatX::Identity(6, 6);
    FimState s(base);
    auto rep = criterion_report(s, base);
    CHECK(rep.f_logdet == 0.0);
    CHECK(rep.trace_inv_ratio == 1.0);
    CHECK(rep.max_eig_inv_ratio == 1.0);
  }

  SUBCASE("identity base plus one unit direction") {
    const int p = 5;
    const MatX base = MatX::Identity(p, p);
    FimState s(base);
    MatX j = MatX::Zero(1, p);
    j(0, 1) = 1.0;
    s.push(InfoAtom(0, dense_blocks(j), MatX::Identity(1, 1)));
    auto rep = criterion_report(s, base);
    CHECK(rep.f_logdet == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // One eigenvalue moves 1 -> 2, so trace(inv) goes p -> p - 1/2.
    CHECK(rep.trace_inv_ratio ==
          doctest::Approx((p - 0.5) / p).epsilon(1e-12));
    CHECK(rep.max_eig_inv_ratio == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("normalized logdet objective is monotone and submodular") {
  std::mt19937_64 eng(31);
  std::uniform_int_distribution<int> pick(0, 9);

  // f over an explicit subset, evaluated densely and independently of the
  // incremental state machinery.
  auto f_of = [](const MatX& base, const std::vector<InfoAtom>& pool,
                 const std::vector<int>& subset) {
    MatX total = base;
    for (int idx : subset) total += pool[idx].dense_information();
    return oracle::logdet(total) - oracle::logdet(base);
  };

  for (int rep = 0; rep < 200; ++rep) {
    const int p = 5;
    const MatX base = oracle::random_spd(eng, p, 0.3, 3.0);
    std::vector<InfoAtom> pool;
    for (int i = 0; i < 10; ++i) pool.push_back(random_atom(eng, i, p, 1 + i % 2));

    // Random nested pair X subset Y plus an extra element s outside Y.
    std::vector<int> x, y;
    const int extra = pick(eng);
    for (int i = 0; i < 10; ++i) {
      if (i == extra) continue;
      const int r = pick(eng);
      if (r < 3) {
        x.push_back(i);
        y.push_back(i);
      } else if (r < 6) {
        y.push_back(i);
      }
    }

    const double fx = f_of(base, pool, x);
    const double fy = f_of(base, pool, y);
    CHECK(fx <= fy + 1e-10);  // monotone

    auto with = [&](std::vector<int> s, int e) {
      s.push_back(e);
      return s;
    };
    const double gx = f_of(base, pool, with(x, extra)) - fx;
    const double gy = f_of(base, pool, with(y, extra)) - fy;
    CHECK(gx >= gy - 1e-10);  // submodular: diminishing returns

    CHECK(f_of(base, pool, {}) == 0.0);  // normalized
  }
}

TEST_CASE("trace-inverse diagnostic is not submodular") {
  // Searches for a violation of diminishing returns for the trace-inverse
  // objective h(F) = -trace(FIM(F)^-1). The logdet criterion is used for
  // selection precisely because this one lacks the guarantee; finding a
  // counterexample is expected, but a fruitless search only warrants a note.
  std::mt19937_64 eng(47);
  std::uniform_int_distribution<int> pick(0, 5);

  auto h_of = [](const MatX& base, const std::vector<InfoAtom>& pool,
                 const std::vector<int>& subset) {
    MatX total = base;
    for (int idx : subset) total += pool[idx].dense_information();
    return -total.inverse().trace();
  };

  bool found = false;
  int draws = 0;
  const int max_draws = 100000;
  while (!found && draws < max_draws) {
    ++draws;
    const int p = 3;
    const MatX base = oracle::random_spd(eng, p, 0.05, 2.0);
    std::vector<InfoAtom> pool;
    for (int i = 0; i < 6; ++i) pool.push_back(random_atom(eng, i, p, 1));

    std::vector<int> x, y;
    const int extra = pick(eng);
    for (int i = 0; i < 6; ++i) {
      if (i == extra) continue;
      const int r = pick(eng);
      if (r < 2) {
        x.push_back(i);
        y.push_back(i);
      } else if (r < 4) {
        y.push_back(i);
      }
    }
    auto with = [&](std::vector<int> s, int e) {
      s.push_back(e);
      return s;
    };
    const double gx = h_of(base, pool, with(x, extra)) - h_of(base, pool, x);
    const double gy = h_of(base, pool, with(y, extra)) - h_of(base, pool, y);
    if (gx < gy - 1e-9) found = true;
  }
  if (found) {
    CHECK(found);
  } else {
    MESSAGE("no trace-inverse submodularity counterexample in ",
            max_draws, " draws: inconclusive");
  }
}

#include <gtest/gtest.h>

#include <sloppy_baker/phasespace.hpp>
#include <sloppy_baker/quantum.hpp>

using namespace sloppy_baker;

namespace {

/// |k> in the position basis.
ComplexVector momentum_state(int n, int k) { return dft_matrix(n).adjoint().col(k); }

QuantumState random_mixed_state(int n, std::uint64_t seed) {
    ComplexMatrix rho = ComplexMatrix::Zero(n, n);
    for (int r = 0; r < 3; ++r) {
        const ComplexVector v = random_state_vector(n, seed * 31 + static_cast<std::uint64_t>(r));
        rho += (0.2 + 0.3 * r) * v * v.adjoint();
    }
    return QuantumState(rho / rho.trace().real());
}

} // namespace

TEST(QuantumState, Validation) {
    EXPECT_THROW(QuantumState(ComplexMatrix::Identity(3, 3) / 3.0), PreconditionError);
    EXPECT_THROW(QuantumState(ComplexMatrix::Identity(2, 2)), PreconditionError);
    ComplexMatrix neg = ComplexMatrix::Zero(2, 2);
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    EXPECT_THROW(QuantumState{neg}, PreconditionError);
    ComplexMatrix skew = ComplexMatrix::Identity(2, 2) / 2.0;
    skew(0, 1) = 0.1;
    EXPECT_THROW(QuantumState{skew}, PreconditionError);
    EXPECT_NO_THROW(QuantumState(ComplexMatrix::Identity(4, 4) / 4.0));
}

TEST(BalazsVoros, SizeTwo) {
    const ComplexMatrix b = balazs_voros(2);
    const double s = 1.0 / std::sqrt(2.0);
    ComplexMatrix want(2, 2);
    want << s, s, s, -s;
    EXPECT_LT(max_abs(b - want), 1e-15);
}

TEST(BalazsVoros, UnitaryAndRejectsOdd) {
    for (int n : {8, 64, 256}) EXPECT_LT(unitarity_error(balazs_voros(n)), 1e-13) << n;
    EXPECT_THROW(balazs_voros(7), PreconditionError);
}

TEST(MomentumProjectors, Algebra) {
    for (int n : {4, 8, 16, 32}) {
        const auto [db, dt] = momentum_projectors(n);
        EXPECT_LT(max_abs(db * db - db), 1e-12);
        EXPECT_LT(max_abs(dt * dt - dt), 1e-12);
        EXPECT_LT(hermiticity_error(db), 1e-12);
        EXPECT_LT(max_abs(db + dt - ComplexMatrix::Identity(n, n)), 1e-13);
        EXPECT_LT(max_abs(db * dt), 1e-13);
        EXPECT_NEAR(db.trace().real(), n / 2.0, 1e-12);
        const Eigen::FullPivLU<ComplexMatrix> lu(db);
        EXPECT_EQ(lu.rank(), n / 2);
    }
}

TEST(MomentumProjectors, BottomAnnihilatesTopMomentum) {
    const auto p = momentum_projectors(4);
    EXPECT_LT((p.bottom * momentum_state(4, 3)).norm(), 1e-15);
    EXPECT_LT((p.bottom * momentum_state(4, 1) - momentum_state(4, 1)).norm(), 1e-15);
}

TEST(Translations, PeriodicityAndAction) {
    const int n = 8;
    const ComplexMatrix v = momentum_translation(n);
    const ComplexMatrix u = position_translation(n);
    ComplexMatrix vn = ComplexMatrix::Identity(n, n), un = ComplexMatrix::Identity(n, n);
    for (int k = 0; k < n; ++k) {
        vn = v * vn;
        un = u * un;
    }
    EXPECT_LT(max_abs(vn - ComplexMatrix::Identity(n, n)), 1e-12);
    EXPECT_LT(max_abs(un - ComplexMatrix::Identity(n, n)), 1e-12);
    for (int j = 0; j < n; ++j) {
        EXPECT_EQ(u((j + 1) % n, j), Complex(1.0));
        EXPECT_LT((v * momentum_state(n, j) - momentum_state(n, (j + 1) % n)).norm(), 1e-14);
    }
}

TEST(Translations, WeylRelation) {
    const int n = 8;
    const ComplexMatrix v = momentum_translation(n);
    const ComplexMatrix u = position_translation(n);
    EXPECT_LT(max_abs(u * v - std::polar(1.0, -2.0 * std::numbers::pi / n) * v * u), 1e-14);
}

TEST(ShiftedTopProjector, Examples) {
    const auto p16 = momentum_projectors(16);
    EXPECT_LT(max_abs(shifted_top_projector(16, 0.0) - p16.top), 1e-15);
    const ComplexMatrix d = shifted_top_projector(16, 0.25);
    EXPECT_LT(max_abs(d.adjoint() * d - p16.top), 1e-13);

    const ComplexMatrix d8 = shifted_top_projector(8, 0.5);
    EXPECT_LT((d8 * momentum_state(8, 4) - momentum_state(8, 2)).norm(), 1e-14);
    EXPECT_LT(max_abs(d8 * momentum_projectors(8).bottom), 1e-13);
}

TEST(ShiftedTopProjector, StrictModeNamesFractionalOption) {
    try {
        shifted_top_projector(8, 0.3);
        FAIL();
    } catch (const PreconditionError& e) {
        EXPECT_NE(std::string(e.what()).find("fractional"), std::string::npos);
    }
    const ComplexMatrix d = shifted_top_projector(8, 0.3, ShiftMode::fractional);
    EXPECT_LT(max_abs(d.adjoint() * d - momentum_projectors(8).top), 1e-13);
}

TEST(MeasurementChannel, ErasesOffDiagonalBlocks) {
    const int n = 8;
    const KrausChannel m = measurement_channel(n);
    EXPECT_LT(m.completeness_residual(), 1e-13);
    const QuantumState rho = random_mixed_state(n, 4);
    const ComplexMatrix f = dft_matrix(n);
    const ComplexMatrix out = f * apply_channel(m, rho).matrix() * f.adjoint();
    EXPECT_LT(max_abs(out.topRightCorner(n / 2, n / 2)), 1e-13);
    EXPECT_LT(max_abs(out.bottomLeftCorner(n / 2, n / 2)), 1e-13);

    const QuantumState mixed = maximally_mixed_state(n);
    EXPECT_LT(max_abs(apply_channel(m, mixed).matrix() - mixed.matrix()), 1e-15);
}

TEST(MeasurementChannel, OffDiagonalBlockContributesNothing) {
    const int n = 4;
    const ComplexMatrix f = dft_matrix(n);
    ComplexMatrix x = ComplexMatrix::Zero(n, n);  // momentum representation
    x(0, 3) = 0.3;
    x(3, 0) = 0.3;
    x(1, 2) = Complex(0.0, 0.2);
    x(2, 1) = Complex(0.0, -0.2);
    const ComplexMatrix in_position = f.adjoint() * x * f;
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    const KrausChannel ch = measurement_channel(n);
    for (const auto& a : ch.operators()) out += a * in_position * a.adjoint();
    EXPECT_LT(max_abs(out), 1e-15);
}

TEST(ShiftChannel, ZeroDeltaMatchesMeasurement) {
    const QuantumState rho = random_mixed_state(16, 9);
    EXPECT_LT(max_abs(apply_channel(shift_channel(16, 0.0), rho).matrix() -
                      apply_channel(measurement_channel(16), rho).matrix()),
              1e-14);
}

TEST(ShiftChannel, TopMomentumUnitMovesDown) {
    const int n = 8;
    for (int k = n / 2; k < n; ++k) {
        const ComplexVector psi = momentum_state(n, k);
        const QuantumState out = apply_channel(shift_channel(n, 0.5), pure_state(psi));
        const ComplexVector target = momentum_state(n, k - 2);
        EXPECT_LT(max_abs(out.matrix() - target * target.adjoint()), 1e-13) << k;
    }
}

TEST(ShiftChannel, PreservesTrace) {
    const KrausChannel ch = shift_channel(16, 0.25);
    for (std::uint64_t s = 0; s < 20; ++s) {
        EXPECT_NEAR(apply_channel(ch, random_pure_state(16, s)).matrix().trace().real(), 1.0, 1e-12);
    }
}

TEST(SloppyChannel, CompletenessAcrossSizes) {
    for (int n : {8, 64, 512}) {
        for (double delta : {0.0, 0.125, 0.25, 0.5}) {
            if (!detail::is_integer_value(n * delta / 2.0)) continue;
            const KrausChannel ch = sloppy_channel(n, delta);
            EXPECT_EQ(ch.size(), 2u);
            EXPECT_LE(ch.completeness_residual(), 1e-12) << n << " " << delta;
        }
    }
}

TEST(SloppyChannel, PurityLossShrinksWithN) {
    double previous = 1.0;
    for (int n : {32, 64, 128}) {
        const CoherentFrame frame(n);
        const QuantumState rho = pure_state(frame.state(nearest_lattice_index({0.25, 0.25}, n)));
        const double loss = 1.0 - apply_channel(sloppy_channel(n, 0.0), rho).purity();
        EXPECT_LT(loss, previous) << n;
        previous = loss;
    }
}

TEST(KrausChannel, RejectsIncompleteFamilies) {
    EXPECT_THROW(KrausChannel({ComplexMatrix::Identity(4, 4) * 0.5}), PreconditionError);
    EXPECT_THROW(KrausChannel({}), PreconditionError);
    EXPECT_THROW(KrausChannel({ComplexMatrix::Identity(4, 4), ComplexMatrix::Zero(2, 2)}), PreconditionError);
}

TEST(ApplyChannel, IdentityAndDimensionCheck) {
    const QuantumState rho = random_mixed_state(8, 1);
    EXPECT_LT(max_abs(apply_channel(identity_channel(8), rho).matrix() - rho.matrix()), 1e-15);
    EXPECT_THROW(apply_channel(identity_channel(4), rho), PreconditionError);
}

TEST(ApplyChannel, CptpContractOnRandomStates) {
    for (int n : {8, 16, 32}) {
        const std::vector<KrausChannel> channels{measurement_channel(n), shift_channel(n, 0.25),
                                                 sloppy_channel(n, 0.0), sloppy_channel(n, 0.25)};
        for (const auto& ch : channels) {
            for (std::uint64_t s = 0; s < 50; ++s) {
                const QuantumState out = apply_channel(ch, random_mixed_state(n, s));
                EXPECT_LE(out.trace_error(), 1e-12);
                EXPECT_LE(out.hermiticity_error(), 1e-12);
                EXPECT_GE(out.min_eigenvalue(), -1e-10);
            }
        }
    }
}

TEST(Entropy, Examples) {
    const QuantumState pure = random_pure_state(8, 3);
    EXPECT_NEAR(von_neumann_entropy(pure), 0.0, 1e-9);
    EXPECT_NEAR(von_neumann_entropy(maximally_mixed_state(16)), std::log(16.0), 1e-10);
    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = 0.75;
    d(1, 1) = 0.25;
    EXPECT_NEAR(von_neumann_entropy(QuantumState(d)), 0.5623, 1e-4);
}

TEST(Entropy, RejectsNegativeEigenvalues) {
    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = 1.0 + 1e-6;
    d(1, 1) = -1e-6;
    EXPECT_THROW(von_neumann_entropy(QuantumState::trusted(d)), NumericalError);
}

TEST(Entropy, GrowsEarlyUnderSloppyChannel) {
    const KrausChannel ch = sloppy_channel(64, 0.25);
    QuantumState rho = random_pure_state(64, 42);
    double s = von_neumann_entropy(rho);
    for (int t = 0; t < 5; ++t) {
        rho = apply_channel(ch, rho);
        const double next = von_neumann_entropy(rho);
        EXPECT_GE(next, s - 1e-9) << t;
        s = next;
    }
}

TEST(RandomPureState, PurityDeterminismAndDistinctSeeds) {
    const QuantumState a = random_pure_state(64, 1);
    EXPECT_NEAR(a.matrix().trace().real(), 1.0, 1e-12);
    EXPECT_NEAR(a.purity(), 1.0, 1e-12);
    EXPECT_EQ(random_state_vector(64, 1), random_state_vector(64, 1));
    const double fidelity = std::norm(random_state_vector(64, 1).dot(random_state_vector(64, 2)));
    EXPECT_LT(fidelity, 1.0 - 1e-6);
}

TEST(RandomPureState, UnitarilyInvariantMean) {
    ComplexMatrix mean = ComplexMatrix::Zero(4, 4);
    for (std::uint64_t s = 0; s < 10000; ++s) {
        const ComplexVector v = random_state_vector(4, s);
        mean += v * v.adjoint();
    }
    mean /= 10000.0;
    EXPECT_LT(max_abs(mean - ComplexMatrix::Identity(4, 4) / 4.0), 2e-2);
}

#include <cmath>

#include <doctest.h>

#include "dtn/generator.hpp"
#include "support/gradient_check.hpp"

using namespace dtn;
namespace dt = dtn::testing;

namespace {

GeneratorParams identity_generator(std::size_t dim) {
    GeneratorParams params;
    params.feature_dim = dim;
    params.latent_dim = dim;
    params.dropout_rate = 0.3;
    params.leaky_slope = 0.2;
    std::vector<double> eye(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) eye[i * dim + i] = 1.0;
    params.phi1_weight = Tensor::matrix(eye, dim, dim, true);
    params.phi1_bias = Tensor::zeros({dim}, true);
    params.phi2_weight = Tensor::matrix(eye, dim, dim, true);
    params.phi2_bias = Tensor::zeros({dim}, true);
    return params;
}

Tensor unit_row(std::vector<double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    for (double& x : v) x /= norm;
    const std::size_t n = v.size();
    return Tensor::matrix(std::move(v), 1, n);
}

}  // namespace

TEST_CASE("phi1_map: eval mode is affine then leaky relu") {
    SeededRng rng(31);
    GeneratorParams params = init_generator(4, 6, 0.3, 0.2, rng);
    Tensor z = dt::random_unit_rows(3, 4, rng);

    SeededRng unused(0);
    Tape tape;
    Tensor latent = phi1_map(tape, params, z, false, unused);
    Tensor direct = ops::leaky_relu(
        tape, ops::affine(tape, z, params.phi1_weight, params.phi1_bias), 0.2);
    CHECK(latent.values() == direct.values());
    CHECK(latent.cols() == 6);
}

TEST_CASE("phi1_map: same seed, same mask, identical outputs") {
    SeededRng rng(32);
    GeneratorParams params = init_generator(4, 8, 0.3, 0.2, rng);
    Tensor z = dt::random_unit_rows(2, 4, rng);
    Tape tape;
    SeededRng a(99), b(99);
    CHECK(phi1_map(tape, params, z, true, a).values() ==
          phi1_map(tape, params, z, true, b).values());
}

TEST_CASE("generate: a coincident reference pair contributes exactly nothing") {
    SeededRng rng(33);
    GeneratorParams params = init_generator(5, 7, 0.3, 0.2, rng);
    Tensor z_s = dt::random_unit_rows(1, 5, rng);
    Tensor r_a = dt::random_unit_rows(1, 5, rng);
    Tensor r_b = dt::random_unit_rows(1, 5, rng);

    SeededRng unused(0);
    Tape tape;
    Tensor out_a = generate(tape, params, z_s, r_a, r_a, false, unused);
    Tensor out_b = generate(tape, params, z_s, r_b, r_b, false, unused);
    CHECK(out_a.values() == out_b.values());  // bitwise: the offset cancels exactly
}

TEST_CASE("generate: identity maps reduce to l2_normalize(z_s + z_r1 - z_r2)") {
    GeneratorParams params = identity_generator(3);
    // strictly positive operands keep every leaky relu on its linear branch
    Tensor z_s = unit_row({1.0, 1.0, 1.0});
    Tensor z_r1 = unit_row({2.0, 1.0, 1.5});
    Tensor z_r2 = unit_row({1.0, 1.2, 1.1});

    SeededRng unused(0);
    Tape tape;
    Tensor out = generate(tape, params, z_s, z_r1, z_r2, false, unused);

    std::vector<double> expected(3);
    double sq = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        expected[i] = z_s.values()[i] + z_r1.values()[i] - z_r2.values()[i];
        REQUIRE(expected[i] > 0.0);
        sq += expected[i] * expected[i];
    }
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(out.values()[i] - expected[i] / std::sqrt(sq)) < 1e-12);
    }
}

TEST_CASE("generate: output width equals the input feature width") {
    SeededRng rng(34);
    GeneratorParams params = init_generator(6, 12, 0.3, 0.2, rng);
    SeededRng unused(0);
    Tape tape;
    Tensor out = generate(tape, params, dt::random_unit_rows(1, 6, rng),
                          dt::random_unit_rows(1, 6, rng), dt::random_unit_rows(1, 6, rng), false,
                          unused);
    CHECK(out.cols() == 6);
    CHECK(out.rows() == 1);
}

TEST_CASE("generate_batch: N*K*H grouped features, H=0 empty") {
    SeededRng rng(35);
    GeneratorParams params = init_generator(4, 6, 0.3, 0.2, rng);
    SeededRng unused(0);

    SUBCASE("5 supports x 3 pairs") {
        Tape tape;
        Tensor out = generate_batch(tape, params, dt::random_unit_rows(5, 4, rng),
                                    dt::random_unit_rows(3, 4, rng),
                                    dt::random_unit_rows(3, 4, rng), false, unused);
        CHECK(out.rows() == 15);
    }
    SUBCASE("10 supports (N=2, K=5) x 4 pairs") {
        Tape tape;
        Tensor out = generate_batch(tape, params, dt::random_unit_rows(10, 4, rng),
                                    dt::random_unit_rows(4, 4, rng),
                                    dt::random_unit_rows(4, 4, rng), false, unused);
        CHECK(out.rows() == 40);
    }
    SUBCASE("H=0") {
        Tape tape;
        Tensor out = generate_batch(tape, params, dt::random_unit_rows(5, 4, rng),
                                    Tensor::zeros({0, 4}), Tensor::zeros({0, 4}), false, unused);
        CHECK(out.rows() == 0);
        CHECK(out.cols() == 4);
    }
}

TEST_CASE("generate_batch: rows group by (support, pair) with no cross-pair coupling") {
    SeededRng rng(36);
    GeneratorParams params = init_generator(4, 6, 0.3, 0.2, rng);
    Tensor supports = dt::random_unit_rows(3, 4, rng);
    Tensor r1 = dt::random_unit_rows(2, 4, rng);
    Tensor r2 = dt::random_unit_rows(2, 4, rng);

    SeededRng unused(0);
    Tape tape;
    Tensor batch = generate_batch(tape, params, supports, r1, r2, false, unused);

    // row s*H + h must equal the single-pair generate of (support s, pair h)
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t h = 0; h < 2; ++h) {
            Tensor zs = Tensor::matrix(
                {supports.values().begin() + static_cast<std::ptrdiff_t>(s * 4),
                 supports.values().begin() + static_cast<std::ptrdiff_t>((s + 1) * 4)},
                1, 4);
            Tensor za = Tensor::matrix(
                {r1.values().begin() + static_cast<std::ptrdiff_t>(h * 4),
                 r1.values().begin() + static_cast<std::ptrdiff_t>((h + 1) * 4)},
                1, 4);
            Tensor zb = Tensor::matrix(
                {r2.values().begin() + static_cast<std::ptrdiff_t>(h * 4),
                 r2.values().begin() + static_cast<std::ptrdiff_t>((h + 1) * 4)},
                1, 4);
            Tape t2;
            Tensor one = generate(t2, params, zs, za, zb, false, unused);
            for (std::size_t c = 0; c < 4; ++c) {
                CHECK(batch.values()[(s * 2 + h) * 4 + c] ==
                      doctest::Approx(one.values()[c]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("latent antisymmetry: swapped pairs mirror around phi1(z_s)") {
    SeededRng rng(37);
    GeneratorParams params = init_generator(4, 6, 0.3, 0.2, rng);
    Tensor z_s = dt::random_unit_rows(1, 4, rng);
    Tensor r1 = dt::random_unit_rows(1, 4, rng);
    Tensor r2 = dt::random_unit_rows(1, 4, rng);

    SeededRng unused(0);
    Tape tape;
    Tensor base = phi1_map(tape, params, z_s, false, unused);
    Tensor l1 = phi1_map(tape, params, r1, false, unused);
    Tensor l2 = phi1_map(tape, params, r2, false, unused);
    Tensor fwd = ops::add(tape, base, ops::sub(tape, l1, l2));
    Tensor rev = ops::add(tape, base, ops::sub(tape, l2, l1));
    for (std::size_t i = 0; i < fwd.size(); ++i) {
        CHECK(fwd.values()[i] + rev.values()[i] ==
              doctest::Approx(2.0 * base.values()[i]).epsilon(1e-12));
    }
}

TEST_CASE("generator parameters receive finite-difference-exact gradients") {
    SeededRng rng(38);
    GeneratorParams params = init_generator(3, 5, 0.3, 0.2, rng);
    Tensor z_s = dt::random_unit_rows(2, 3, rng);
    Tensor r1 = dt::random_unit_rows(2, 3, rng);
    Tensor r2 = dt::random_unit_rows(2, 3, rng);
    Tensor probe = dt::random_tensor({4, 3}, rng, -1.0, 1.0, false);

    const double worst = dt::check_gradients(
        {params.phi1_weight, params.phi1_bias, params.phi2_weight, params.phi2_bias},
        [&](Tape& t) {
            SeededRng unused(0);
            Tensor gen = generate_batch(t, params, z_s, r1, r2, false, unused);
            return ops::sum(t, ops::mul(t, gen, probe));
        });
    CHECK(worst < 1e-4);
}

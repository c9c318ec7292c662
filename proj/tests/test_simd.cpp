#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "ctrank/simd/kernels.hpp"

using namespace ctrank::simd;

namespace {

template <typename T>
std::vector<T> random_vec(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    std::vector<T> v(n);
    for (auto& x : v) {
        x = static_cast<T>(d(rng));
    }
    return v;
}

}  // namespace

TEST_CASE("scalar is always available and listed first") {
    const auto isas = available_isas();
    REQUIRE(!isas.empty());
    CHECK(isas.front() == Isa::scalar);
    CHECK(kernels_for(Isa::scalar).isa == Isa::scalar);
}

TEST_CASE("every variant agrees with the scalar reference") {
    const KernelTable& ref = kernels_for(Isa::scalar);
    std::mt19937_64 rng(3);
    for (Isa isa : available_isas()) {
        const KernelTable& k = kernels_for(isa);
        CAPTURE(to_string(isa));
        // Lengths around every vector width and remainder path.
        for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 100u, 1023u}) {
            CAPTURE(n);
            auto af = random_vec<float>(rng, n), bf = random_vec<float>(rng, n);
            auto ad = random_vec<double>(rng, n), bd = random_vec<double>(rng, n);

            const double want_f = ref.dot_f32(af.data(), bf.data(), n);
            CHECK(k.dot_f32(af.data(), bf.data(), n) == doctest::Approx(want_f).epsilon(1e-12));
            const double want_d = ref.dot_f64(ad.data(), bd.data(), n);
            CHECK(std::abs(k.dot_f64(ad.data(), bd.data(), n) - want_d) <= 1e-12 * (1.0 + std::abs(want_d)) * n);

            auto yf_ref = bf, yf = bf;
            ref.axpy_f32(0.37f, af.data(), yf_ref.data(), n);
            k.axpy_f32(0.37f, af.data(), yf.data(), n);
            for (std::size_t i = 0; i < n; ++i) {
                // FMA rounds once, the scalar path twice.
                CHECK(yf[i] == doctest::Approx(yf_ref[i]).epsilon(1e-6));
            }
            auto yd_ref = bd, yd = bd;
            ref.axpy_f64(-1.25, ad.data(), yd_ref.data(), n);
            k.axpy_f64(-1.25, ad.data(), yd.data(), n);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(yd[i] == doctest::Approx(yd_ref[i]).epsilon(1e-14));
            }
            auto sf_ref = af, sf = af;
            ref.scale_f32(0.5f, sf_ref.data(), n);
            k.scale_f32(0.5f, sf.data(), n);
            CHECK(sf == sf_ref);
        }
    }
}

TEST_CASE("scalar dot matches a plain loop") {
    std::mt19937_64 rng(5);
    auto a = random_vec<float>(rng, 257), b = random_vec<float>(rng, 257);
    double want = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        want += static_cast<double>(a[i]) * b[i];
    }
    CHECK(kernels_for(Isa::scalar).dot_f32(a.data(), b.data(), a.size()) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("set_active_isa switches and rejects unavailable variants") {
    const Isa before = active_isa();
    for (Isa isa : available_isas()) {
        set_active_isa(isa);
        CHECK(active_isa() == isa);
    }
    for (Isa isa : {Isa::avx2, Isa::neon}) {
        bool listed = false;
        for (Isa a : available_isas()) {
            listed = listed || a == isa;
        }
        if (!listed) {
            CHECK_THROWS_AS(set_active_isa(isa), std::invalid_argument);
        }
    }
    set_active_isa(before);
}

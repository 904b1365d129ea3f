#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "common/error.hpp"
#include "doctest.h"
#include "nn/grad_check.hpp"
#include "nn/layers.hpp"
#include "oracles.hpp"

using namespace dnim;
using namespace dnim::nn;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, SplitMix64& rng, double scale = 1.0) {
    Tensor t(r, c);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * (2.0 * rng.uniform() - 1.0);
    return t;
}

// Scalar read-out with fixed random weights, so every output coordinate
// contributes a distinct gradient.
Var probe(const Var& out, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return sum(mul(out, constant(random_tensor(out->value.rows(), out->value.cols(), rng))));
}

double check(ParameterSet& ps, const std::function<Var()>& loss) {
    GradCheckOptions opts;
    opts.coords_per_tensor = 0;
    const auto report = grad_check(ps, loss, opts);
    CHECK(report.coords_checked > 0);
    return report.max_rel_error;
}

void set(ParameterSet& ps, const std::string& name, Tensor t) {
    auto& v = ps.get(name)->value;
    REQUIRE(v.same_shape(t));
    v = std::move(t);
}

}  // namespace

TEST_CASE("tensor basics") {
    const Tensor t{{1, 2, 3}, {4, 5, 6}};
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 3);
    CHECK(t(1, 2) == 6);
    CHECK_THROWS_AS(Tensor(2, 2, std::vector<double>{1, 2, 3}), UsageError);
    CHECK_THROWS_AS((Tensor{{1, 2}, {3}}), UsageError);
    Tensor out(2, 2);
    gemm(Tensor{{1, 2}, {3, 4}}, Tensor{{5, 6}, {7, 8}}, out);
    CHECK(out == Tensor{{19, 22}, {43, 50}});
}

TEST_CASE("non-finite values are numeric errors") {
    auto x = leaf(Tensor{{800.0}});
    CHECK_THROWS_AS(affine(x, 1e308, 0.0), NumericError);
    CHECK_THROWS_AS(square(constant(Tensor{{1e200}})), NumericError);
}

TEST_CASE("mlp forward") {
    SplitMix64 rng(1);
    ParameterSet ps;
    init_mlp(ps, "m", 2, 2, 1, rng);
    SUBCASE("all-zero parameters give zero output") {
        for (std::size_t i = 0; i < ps.size(); ++i) ps.at(i)->value.fill(0.0);
        CHECK(mlp_forward(constant(Tensor{{3, -4}}), ps, "m")->value == Tensor{{0}});
    }
    SUBCASE("hand-set 2-2-1 network") {
        set(ps, "m.w1", Tensor{{1, -1}, {2, 1}});
        set(ps, "m.b1", Tensor{{0.5, -3}});
        set(ps, "m.w2", Tensor{{2}, {7}});
        set(ps, "m.b2", Tensor{{0.25}});
        // hidden = relu(5.5, -2) = (5.5, 0); out = 11 + 0.25
        CHECK(mlp_forward(constant(Tensor{{1, 2}}), ps, "m")->value == Tensor{{11.25}});
    }
    SUBCASE("width mismatch") {
        CHECK_THROWS_AS(mlp_forward(constant(Tensor{{1, 2, 3}}), ps, "m"), UsageError);
    }
}

TEST_CASE("mlp identity passthrough on non-negative input") {
    SplitMix64 rng(2);
    ParameterSet ps;
    init_mlp(ps, "m", 3, 3, 3, rng);
    const Tensor eye{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    set(ps, "m.w1", eye);
    set(ps, "m.w2", eye);
    const Tensor x{{0.5, 0, 2}, {1, 3, 0.25}};
    CHECK(mlp_forward(constant(x), ps, "m")->value == x);
}

TEST_CASE("gru cell") {
    SplitMix64 rng(3);
    ParameterSet ps;
    init_gru(ps, "g", 1, 2, rng);
    SUBCASE("zero parameters halve the memory") {
        for (std::size_t i = 0; i < ps.size(); ++i) ps.at(i)->value.fill(0.0);
        CHECK(gru_cell(constant(Tensor{{7}}), constant(Tensor{{0.4, -2}}), ps, "g")->value == Tensor{{0.2, -1}});
        CHECK(gru_cell(constant(Tensor{{7}}), constant(Tensor{{0, 0}}), ps, "g")->value == Tensor{{0, 0}});
    }
    SUBCASE("hand-set gates") {
        for (std::size_t i = 0; i < ps.size(); ++i) ps.at(i)->value.fill(0.0);
        set(ps, "g.wz", Tensor{{1, 0}});
        set(ps, "g.wh", Tensor{{0, 1}});
        set(ps, "g.uh", Tensor{{1, 0}, {0, 1}});
        // z = (sigmoid 2, 1/2), r = 1/2, h~ = tanh(0.2, 1.7)
        const auto s = gru_cell(constant(Tensor{{2}}), constant(Tensor{{0.4, -0.6}}), ps, "g")->value;
        CHECK(s(0, 0) == doctest::Approx(0.22152877412789132).epsilon(1e-14));
        CHECK(s(0, 1) == doctest::Approx(0.1677045353015495).epsilon(1e-14));
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(gru_cell(constant(Tensor{{1, 2}}), constant(Tensor{{0, 0}}), ps, "g"), UsageError);
        CHECK_THROWS_AS(gru_cell(constant(Tensor{{1}}), constant(Tensor{{0, 0, 0}}), ps, "g"), UsageError);
    }
}

TEST_CASE("attention examples") {
    SplitMix64 rng(4);
    ParameterSet ps;
    init_attention(ps, "a", 3, 4, 4, rng);
    SUBCASE("single key: output is the projected value regardless of the query") {
        const auto k = constant(random_tensor(1, 4, rng));
        const auto v = constant(random_tensor(1, 4, rng));
        const auto a = multi_head_attention(constant(random_tensor(1, 3, rng)), k, v, 2, ps, "a")->value;
        const auto b = multi_head_attention(constant(random_tensor(1, 3, rng)), k, v, 2, ps, "a")->value;
        const auto direct = matmul(matmul(v, ps.get("a.wv")), ps.get("a.wo"))->value;
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(a[i] == doctest::Approx(direct[i]).epsilon(1e-12));
            CHECK(b[i] == doctest::Approx(direct[i]).epsilon(1e-12));
        }
    }
    SUBCASE("identical values: output is the projected value") {
        const auto row = random_tensor(1, 4, rng);
        Tensor vals(2, 4);
        for (std::size_t c = 0; c < 4; ++c) vals(0, c) = vals(1, c) = row(0, c);
        const auto out = multi_head_attention(constant(random_tensor(1, 3, rng)), constant(random_tensor(2, 4, rng)),
                                              constant(vals), 2, ps, "a")
                             ->value;
        const auto direct = matmul(matmul(constant(row), ps.get("a.wv")), ps.get("a.wo"))->value;
        for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(direct[i]).epsilon(1e-12));
    }
    SUBCASE("empty key set") {
        CHECK_THROWS_AS(multi_head_attention(constant(random_tensor(1, 3, rng)), constant(Tensor(0, 4)),
                                             constant(Tensor(0, 4)), 2, ps, "a"),
                        UsageError);
    }
}

TEST_CASE("attention hand-computed softmax mix") {
    SplitMix64 rng(5);
    ParameterSet ps;
    init_attention(ps, "a", 1, 1, 1, rng);
    for (const char* n : {"a.wq", "a.wk", "a.wv", "a.wo"}) set(ps, n, Tensor{{1}});
    // scores (0, ln 2) -> weights (1/3, 2/3); values (3, 6) -> 5
    const auto out = multi_head_attention(constant(Tensor{{1}}), constant(Tensor{{0}, {std::log(2.0)}}),
                                          constant(Tensor{{3}, {6}}), 1, ps, "a");
    CHECK(out->value(0, 0) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("softmax weights sum to one per head and segment") {
    SplitMix64 rng(6);
    const std::size_t offsets[] = {0, 3, 3, 8};
    Tensor ones(8, 6, 1.0);
    const auto out = segment_attention(constant(random_tensor(3, 6, rng, 3.0)), constant(random_tensor(8, 6, rng, 3.0)),
                                       constant(ones), offsets, 3)
                         ->value;
    for (std::size_t c = 0; c < 6; ++c) {
        CHECK(std::abs(out(0, c) - 1.0) <= 1e-12);
        CHECK(out(1, c) == 0.0);  // empty segment
        CHECK(std::abs(out(2, c) - 1.0) <= 1e-12);
    }
}

TEST_CASE("attention is invariant to joint permutation of keys and values") {
    SplitMix64 rng(7);
    ParameterSet ps;
    init_attention(ps, "a", 4, 4, 4, rng);
    const auto q = constant(random_tensor(1, 4, rng));
    const auto k = random_tensor(5, 4, rng);
    const auto v = random_tensor(5, 4, rng);
    const std::size_t perm[] = {3, 0, 4, 2, 1};
    Tensor kp(5, 4), vp(5, 4);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t c = 0; c < 4; ++c) {
            kp(i, c) = k(perm[i], c);
            vp(i, c) = v(perm[i], c);
        }
    const auto a = multi_head_attention(q, constant(k), constant(v), 2, ps, "a")->value;
    const auto b = multi_head_attention(q, constant(kp), constant(vp), 2, ps, "a")->value;
    for (std::size_t i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));
}

TEST_CASE("time encoding") {
    ParameterSet ps;
    init_time_encoding(ps, "t", 4);
    CHECK(ps.get("t.omega")->value(0, 0) == 1.0);
    CHECK(ps.get("t.omega")->value(0, 3) == doctest::Approx(1000.0).epsilon(1e-14));
    CHECK(time_encode(constant(Tensor{{0}}), ps, "t")->value == Tensor{{1, 1, 1, 1}});

    ps.get("t.omega")->value.fill(0.0);
    set(ps, "t.bias", Tensor{{0, 1, 2, 3}});
    const auto a = time_encode(constant(Tensor{{0.1}, {0.9}}), ps, "t")->value;
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(a(0, c) == std::cos(static_cast<double>(c)));
        CHECK(a(1, c) == std::cos(static_cast<double>(c)));
    }

    ParameterSet one;
    init_time_encoding(one, "t", 1);
    set(one, "t.omega", Tensor{{std::numbers::pi}});
    CHECK(time_encode(constant(Tensor{{1}}), one, "t")->value(0, 0) == -1.0);
    CHECK_THROWS_AS(time_encode(constant(Tensor{{1, 2}}), one, "t"), UsageError);
}

TEST_CASE("grad_check examples") {
    SplitMix64 rng(8);
    ParameterSet ps;
    ps.add("w", random_tensor(3, 4, rng));
    SUBCASE("sum of squares") {
        CHECK(check(ps, [&] { return sum(square(ps.get("w"))); }) < 1e-8);
    }
    SUBCASE("constant function has exactly zero gradient") {
        ps.zero_grad();
        auto root = sum(constant(Tensor(2, 2, 3.0)));
        backward(root);
        for (double g : ps.get("w")->grad.values()) CHECK(g == 0.0);
        GradCheckOptions opts;
        opts.coords_per_tensor = 0;
        CHECK(grad_check(ps, [] { return sum(constant(Tensor(2, 2, 3.0))); }, opts).max_rel_error == 0.0);
    }
}

TEST_CASE("per-primitive gradients match finite differences") {
    SplitMix64 rng(9);
    ParameterSet ps;
    ps.add("a", random_tensor(3, 4, rng));
    ps.add("b", random_tensor(4, 2, rng));
    ps.add("c", random_tensor(3, 4, rng));
    ps.add("row", random_tensor(1, 4, rng));
    const auto& a = ps.get("a");
    const auto& b = ps.get("b");
    const auto& c = ps.get("c");

    CHECK(check(ps, [&] { return probe(matmul(a, b), 1); }) < 1e-6);
    CHECK(check(ps, [&] { return probe(add(a, c), 2); }) < 1e-6);
    CHECK(check(ps, [&] { return probe(sub(a, c), 3); }) < 1e-6);
    CHECK(check(ps, [&] { return probe(mul(a, c), 4); }) < 1e-6);
    CHECK(check(ps, [&] { return probe(add_row(a, ps.get("row")), 5); }) < 1e-6);
    CHECK(check(ps, [&] { return probe(affine(a, -2.5, 0.75), 6); }) < 1e-6);
    CHECK(check(ps, [&] { return probe(relu(a), 7); }) < 1e-6);
    CHECK(check(ps, [&] { return probe(sigmoid(a), 8); }) < 1e-6);
    CHECK(check(ps, [&] { return probe(tanh(a), 9); }) < 1e-6);
    CHECK(check(ps, [&] { return probe(cos(a), 10); }) < 1e-6);
    CHECK(check(ps, [&] { return mean(square(a)); }) < 1e-6);
    CHECK(check(ps, [&] {
              const Var parts[] = {a, c, gather_rows(b, std::vector<std::size_t>{0, 3, 3})};
              return probe(concat_cols(parts), 11);
          }) < 1e-6);
    CHECK(check(ps, [&] {
              const std::size_t rows[] = {2, 0};
              return probe(scatter_rows(a, rows, gather_rows(c, std::vector<std::size_t>{1, 1})), 12);
          }) < 1e-6);
    CHECK(check(ps, [&] {
              const double m[] = {1.0, 0.0, -2.0};
              return probe(mask_rows(a, m), 13);
          }) < 1e-6);
    CHECK(check(ps, [&] { return probe(sigmoid_gram_colsum(a, c), 14); }) < 1e-6);
}

TEST_CASE("layer gradients match finite differences") {
    SplitMix64 rng(10);
    ParameterSet ps;
    init_mlp(ps, "m", 4, 5, 3, rng);
    init_gru(ps, "g", 3, 4, rng);
    init_attention(ps, "a", 4, 3, 4, rng);
    init_time_encoding(ps, "t", 3);
    ps.add("x", random_tensor(2, 4, rng));
    ps.add("msg", random_tensor(2, 3, rng));
    ps.add("mem", random_tensor(2, 4, rng));
    ps.add("entries", random_tensor(5, 3, rng));
    ps.add("times", random_tensor(4, 1, rng, 0.5));
    // At omega ~ 1e3 the central-difference truncation error alone is
    // ~(omega eps)^2 / 6, so probe the primitive at moderate frequencies.
    set(ps, "t.omega", random_tensor(1, 3, rng, 3.0));
    set(ps, "t.bias", random_tensor(1, 3, rng));
    const std::size_t offsets[] = {0, 2, 5};

    CHECK(check(ps, [&] { return probe(mlp_forward(ps.get("x"), ps, "m"), 21); }) < 1e-6);
    CHECK(check(ps, [&] { return probe(gru_cell(ps.get("msg"), ps.get("mem"), ps, "g"), 22); }) < 1e-6);
    CHECK(check(ps, [&] { return probe(time_encode(ps.get("times"), ps, "t"), 23); }) < 1e-6);
    CHECK(check(ps, [&] {
              return probe(segment_multi_head_attention(ps.get("mem"), ps.get("entries"), offsets, 2, ps, "a"), 24);
          }) < 1e-6);
}

TEST_CASE("backward accumulates through shared subexpressions") {
    auto x = leaf(Tensor{{3.0}});
    auto y = mul(x, x);
    backward(sum(add(y, x)));
    CHECK(x->grad == Tensor{{7.0}});
    CHECK_THROWS_AS(backward(leaf(Tensor{{1, 2}})), UsageError);
}

TEST_CASE("parameter set management") {
    SplitMix64 rng(11);
    ParameterSet ps;
    init_mlp(ps, "m", 2, 3, 1, rng);
    CHECK(ps.size() == 4);
    CHECK(ps.scalar_count() == 6 + 3 + 3 + 1);
    CHECK_THROWS_AS(ps.add("m.w1", Tensor(1, 1)), UsageError);
    CHECK_THROWS_AS(ps.get("nope"), UsageError);
    CHECK(ps.get("m.b1")->value == Tensor(1, 3));

    auto copy = ps.clone();
    CHECK(copy.same_values(ps));
    copy.get("m.w1")->value(0, 0) += 1.0;
    CHECK_FALSE(copy.same_values(ps));
    ps.assign(copy);
    CHECK(copy.same_values(ps));

    const double a = std::sqrt(6.0 / 5.0);
    for (double v : ps.get("m.w1")->value.values()) CHECK(std::abs(v) <= a);
}

TEST_CASE("checkpoint round trip") {
    SplitMix64 rng(12);
    ParameterSet ps;
    init_mlp(ps, "m", 3, 4, 2, rng);
    init_time_encoding(ps, "t", 5);
    std::stringstream ss;
    save_checkpoint(ss, ps);
    const auto back = load_checkpoint(ss);
    REQUIRE(back.size() == ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) CHECK(back.name(i) == ps.name(i));
    CHECK(back.same_values(ps));

    const auto path = (std::filesystem::temp_directory_path() / "dnim_nn_ckpt.bin").string();
    save_checkpoint(path, ps);
    CHECK(load_checkpoint(path).same_values(ps));
    std::filesystem::remove(path);

    std::stringstream bad("garbage!");
    CHECK_THROWS_AS(load_checkpoint(bad), DataError);
    std::string bytes = ss.str();
    std::stringstream truncated(bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(truncated), DataError);
}

TEST_CASE("optimizers") {
    ParameterSet ps;
    ps.add("w", Tensor{{1.0, -2.0}});
    SUBCASE("sgd") {
        ps.get("w")->grad = Tensor{{0.5, -4.0}};
        Sgd(0.1).step(ps);
        CHECK(ps.get("w")->value(0, 0) == doctest::Approx(0.95));
        CHECK(ps.get("w")->value(0, 1) == doctest::Approx(-1.6));
    }
    SUBCASE("adam first step moves by about lr against the gradient sign") {
        ps.get("w")->grad = Tensor{{0.5, -4.0}};
        Adam(0.01).step(ps);
        CHECK(ps.get("w")->value(0, 0) == doctest::Approx(0.99).epsilon(1e-6));
        CHECK(ps.get("w")->value(0, 1) == doctest::Approx(-1.99).epsilon(1e-6));
    }
    SUBCASE("sgd descends a quadratic") {
        for (int i = 0; i < 200; ++i) {
            ps.zero_grad();
            backward(sum(square(ps.get("w"))));
            Sgd(0.05).step(ps);
        }
        CHECK(std::abs(ps.get("w")->value(0, 0)) < 1e-6);
    }
}

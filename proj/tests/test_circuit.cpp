#include "invchan/circuit.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace invchan;

namespace {

const DelayModel kExp = DelayModel::exp({1.0, 1.0, 0.5});

bool has_rule(const std::vector<StructuralError>& errs, const std::string& rule)
{
    return std::any_of(errs.begin(), errs.end(), [&](const auto& e) { return e.rule == rule; });
}

Circuit spf_shape()
{
    // HT channel drives the output port directly; the builder inserts o$buf
    return CircuitBuilder()
        .input("i")
        .gate("or", TruthTable::or2(), {"i", "c"})
        .channel("c", kExp, false, "or", "or")
        .channel("ht", DelayModel::exp({16.0, 1.0, 0.9}), false, "or", "o")
        .output("o", "ht")
        .build();
}

} // namespace

TEST(TruthTable, ParseAndEvaluate)
{
    const auto t = TruthTable::parse("0111");
    EXPECT_EQ(t.arity(), 2u);
    const bool in00[] = {false, false};
    const bool in10[] = {true, false};
    EXPECT_FALSE(t(in00));
    EXPECT_TRUE(t(in10));
    // first input is the most significant bit
    const auto imp = TruthTable::parse("1101"); // !a | b
    const bool a1b0[] = {true, false};
    const bool a0b1[] = {false, true};
    EXPECT_FALSE(imp(a1b0));
    EXPECT_TRUE(imp(a0b1));
    EXPECT_EQ(TruthTable::parse("1").arity(), 0u);
    EXPECT_EQ(t.to_string(), "0111");
    EXPECT_THROW(TruthTable::parse("011"), InvalidModel);
    EXPECT_THROW(TruthTable::parse("01a1"), ParseError);
    EXPECT_THROW(TruthTable(std::vector<bool>(512, false)), InvalidModel);
    EXPECT_NO_THROW(TruthTable(std::vector<bool>(256, false)));
}

TEST(Validate, SpfCircuitIsValidAndCyclic)
{
    const Circuit c = spf_shape();
    EXPECT_TRUE(validate(c).empty());
    EXPECT_FALSE(is_forward(c));
    EXPECT_NE(c.index_of("o$buf"), kMissing);
    EXPECT_EQ(c.vertex(static_cast<std::size_t>(c.index_of("ht"))).channel()->to, "o$buf");
}

TEST(Validate, ChannelsInSeries)
{
    const Circuit c = CircuitBuilder()
                          .input("i")
                          .gate("a", TruthTable::identity(), {"i"})
                          .channel("c1", kExp, false, "a", "c2")
                          .channel("c2", kExp, false, "c1", "b")
                          .gate("b", TruthTable::identity(), {"c2"})
                          .output("o", "b")
                          .build();
    const auto errs = validate(c);
    ASSERT_TRUE(has_rule(errs, "C7"));
    for (const auto& e : errs) {
        if (e.rule == "C7") {
            EXPECT_NE(e.message.find("c1 -> c2"), std::string::npos) << e.message;
        }
    }
}

TEST(Validate, GatesInSeries)
{
    const Circuit c = CircuitBuilder()
                          .input("i")
                          .gate("a", TruthTable::identity(), {"i"})
                          .gate("b", TruthTable::identity(), {"a"})
                          .output("o", "b")
                          .build();
    EXPECT_TRUE(has_rule(validate(c), "C7"));
}

TEST(Validate, SharedInitialValues)
{
    const Circuit c = CircuitBuilder()
                          .input("i")
                          .gate("a", TruthTable::identity(), {"i"})
                          .channel("c1", kExp, false, "a", "b")
                          .channel("c2", kExp, true, "a", "b")
                          .gate("b", TruthTable::and2(), {"c1", "c2"})
                          .output("o", "b")
                          .build();
    EXPECT_TRUE(has_rule(validate(c), "init"));
}

TEST(Validate, OtherRules)
{
    // dangling input
    EXPECT_TRUE(has_rule(validate(CircuitBuilder()
                                      .input("i")
                                      .input("j")
                                      .gate("a", TruthTable::identity(), {"i"})
                                      .output("o", "a")
                                      .build()),
                         "C2"));
    // arity mismatch
    EXPECT_TRUE(has_rule(validate(CircuitBuilder()
                                      .input("i")
                                      .gate("a", TruthTable::or2(), {"i"})
                                      .output("o", "a")
                                      .build()),
                         "C5"));
    // output straight from an input
    EXPECT_TRUE(has_rule(validate(CircuitBuilder().input("i").output("o", "i").build()), "C3"));
    // unknown reference
    EXPECT_TRUE(has_rule(validate(CircuitBuilder()
                                      .input("i")
                                      .gate("a", TruthTable::or2(), {"i", "ghost"})
                                      .output("o", "a")
                                      .build()),
                         "ref"));
    // channel that nobody reads
    EXPECT_TRUE(has_rule(validate(CircuitBuilder()
                                      .input("i")
                                      .gate("a", TruthTable::identity(), {"i"})
                                      .channel("c", kExp, false, "a", "a")
                                      .output("o", "a")
                                      .build()),
                         "C4"));
    // duplicate id
    EXPECT_TRUE(has_rule(validate(CircuitBuilder()
                                      .input("i")
                                      .gate("i", TruthTable::identity(), {"i"})
                                      .output("o", "i")
                                      .build()),
                         "id"));
}

TEST(Validate, ForwardCircuits)
{
    const Circuit chain = CircuitBuilder()
                              .input("i")
                              .gate("a", TruthTable::identity(), {"i"})
                              .channel("c", kExp, false, "a", "b")
                              .gate("b", TruthTable::identity(), {"c"})
                              .output("o", "b")
                              .build();
    EXPECT_TRUE(validate(chain).empty());
    EXPECT_TRUE(is_forward(chain));
    const Circuit trivial = CircuitBuilder().input("i").gate("b", TruthTable::identity(), {"i"}).output("o", "b").build();
    EXPECT_TRUE(validate(trivial).empty());
    EXPECT_TRUE(is_forward(trivial));
}

TEST(Validate, Idempotent)
{
    std::mt19937_64 rng(8);
    for (int k = 0; k < 50; ++k) {
        const Circuit c = invchan::testing::random_circuit(rng);
        const auto a = validate(c);
        const auto b = validate(c);
        EXPECT_TRUE(a.empty());
        EXPECT_EQ(a.size(), b.size());
    }
}

TEST(Circuit, DeterministicIndexing)
{
    const Circuit c = spf_shape();
    for (std::size_t k = 1; k < c.size(); ++k) {
        EXPECT_LT(c.vertex(k - 1).id, c.vertex(k).id);
    }
    const auto& preds = c.preds(static_cast<std::size_t>(c.index_of("or")));
    ASSERT_EQ(preds.size(), 2u);
    EXPECT_EQ(c.vertex(static_cast<std::size_t>(preds[0])).id, "i");
    EXPECT_EQ(c.vertex(static_cast<std::size_t>(preds[1])).id, "c");
}

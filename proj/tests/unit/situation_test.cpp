#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "situgen/error.hpp"
#include "situgen/situation.hpp"
#include "test_util.hpp"

using namespace situgen;
using nlohmann::json;

TEST(Situation, StandingIsOnAPassableCell) {
  const Scene s = test::fixture_scene("living_01");
  const SituationSampler sampler(s);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Situation sit = sampler.standing(rng);
    const auto cell = sampler.grid().locate(sit.location.xy());
    ASSERT_TRUE(cell);
    EXPECT_TRUE(sampler.grid().passable(*cell));
    EXPECT_GE(sit.rotation, 0.0);
    EXPECT_LT(sit.rotation, kTwoPi);
    EXPECT_FALSE(sit.anchor_object);
  }
}

TEST(Situation, SittingFacesTheSeatFront) {
  const Scene s = test::fixture_scene("living_01");
  const SituationSampler sampler(s);
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Situation sit = sampler.sitting(rng);
    ASSERT_TRUE(sit.anchor_object);
    const ObjectInstance& seat = *s.find(*sit.anchor_object);
    EXPECT_TRUE(seat.has(ObjectFlag::sittable));
    EXPECT_NEAR(sit.location.z, seat.top(), 1e-12);
    EXPECT_NEAR(std::abs(wrap_pi(sit.rotation - heading_of(*seat.front_normal))), 0.0, 1e-12);
    // inside the shrunken seat rectangle
    const Vec2 local = rotate(sit.location.xy() - seat.centroid.xy(), -seat.footprint().yaw);
    EXPECT_LE(std::abs(local.x), 0.4 * seat.size.x + 1e-9);
    EXPECT_LE(std::abs(local.y), 0.4 * seat.size.y + 1e-9);
  }
}

TEST(Situation, LargeInteractionFacesThePart) {
  const Scene s = test::fixture_scene("kitchen_01");
  const SituationSampler sampler(s);
  Rng rng(3);
  ASSERT_FALSE(sampler.large_interactables().empty());
  for (int i = 0; i < 50; ++i) {
    const Situation sit = sampler.sample(Interaction::interact_large, rng);
    const ObjectInstance& obj = *s.find(*sit.anchor_object);
    const auto& part = *obj.interactive_part;
    const Vec2 p = sit.location.xy();
    EXPECT_LE(distance(p, part.center.xy()), sampler.config().interaction_radius + 1e-12);
    EXPECT_GT(dot(p - part.center.xy(), part.normal), 0.0);
    EXPECT_NEAR(std::abs(wrap_pi(sit.rotation - heading_of(-part.normal))), 0.0, 1e-12);
  }
}

TEST(Situation, SmallInteractionLooksAtTheObject) {
  const Scene s = test::fixture_scene("office_01");
  const SituationSampler sampler(s);
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const Situation sit = sampler.sample(Interaction::interact_small, rng);
    const ObjectInstance& obj = *s.find(*sit.anchor_object);
    EXPECT_TRUE(obj.has(ObjectFlag::small_interactable));
    EXPECT_LE(distance(sit.location.xy(), obj.centroid.xy()), 1.0 + 1e-12);
    EXPECT_NEAR(std::abs(wrap_pi(sit.rotation - heading_of(obj.centroid.xy() - sit.location.xy()))), 0.0, 1e-12);
  }
}

TEST(Situation, MissingCapabilitiesRaise) {
  Scene s = test::fixture_scene("office_01");
  for (auto& o : s.objects) o.flags = o.flags & ~static_cast<std::uint8_t>(ObjectFlag::sittable);
  const SituationSampler sampler(s);
  Rng rng(5);
  EXPECT_THROW(sampler.sitting(rng), Error);
  const ObjectInstance* no_part = nullptr;
  for (const auto& o : s.objects) {
    if (!o.interactive_part) no_part = &o;
  }
  ASSERT_NE(no_part, nullptr);
  EXPECT_THROW(sampler.interact_large(*no_part, rng), Error);
}

TEST(Situation, SamplingIsDeterministic) {
  const Scene s = test::fixture_scene("bedroom_01");
  const SituationSampler sampler(s);
  for (const auto kind : kAllInteractions) {
    Rng a(7);
    Rng b(7);
    EXPECT_EQ(sampler.sample(kind, a), sampler.sample(kind, b));
  }
}

TEST(Situation, JsonRoundTripAndCanonicalization) {
  const Scene s = test::fixture_scene("bedroom_01");
  const SituationSampler sampler(s);
  Rng rng(8);
  for (const auto kind : kAllInteractions) {
    Situation sit = canonicalized(sampler.sample(kind, rng));
    sit.action_text = render_action_description(sit, s, HoiBank::bundled(), rng);
    sit.location_text = render_location_description(s, sit, 3);
    const json j = situation_to_json(sit);
    EXPECT_EQ(situation_from_json(j), sit);
    EXPECT_EQ(situation_to_json(situation_from_json(j)).dump(), j.dump());
    EXPECT_EQ(canonicalized(sit), sit);
    EXPECT_TRUE(j.contains("rot_deg"));
  }
}

TEST(Situation, TextsReferenceRealObjects) {
  for (const auto& s : load_scene_pack(test::scenes_dir())) {
    const SituationSampler sampler(s);
    Rng rng(9);
    for (const auto kind : kAllInteractions) {
      Situation sit;
      try {
        sit = sampler.sample(kind, rng);
      } catch (const Error&) {
        continue;
      }
      const auto action = render_action_description(sit, s, HoiBank::bundled(), rng);
      const auto location = render_location_description(s, sit, 3);
      EXPECT_TRUE(has_referential_integrity(action, s)) << action.flat();
      EXPECT_TRUE(has_referential_integrity(location, s)) << location.flat();
      EXPECT_FALSE(action.flat().empty());
      if (sit.anchor_object) {
        const auto ids = location.referenced_ids();
        EXPECT_EQ(std::count(ids.begin(), ids.end(), *sit.anchor_object), 0);
      }
    }
  }
}

TEST(Situation, LocationTextViaChat) {
  const Scene s = test::fixture_scene("bedroom_01");
  const ObjectInstance& bed = s.objects.front();
  test::FakeChat chat([&](const ChatRequest&) {
    return "I stand with the " + placeholder_token(bed.label, bed.id) + " at my 2 o'clock.";
  });
  Rng rng(10);
  const Situation sit = SituationSampler(s).standing(rng);
  const auto text = render_location_description(s, sit, 3, &chat, {}, "m");
  EXPECT_EQ(chat.calls(), 1u);
  EXPECT_EQ(text.referenced_ids(), std::vector<int>{bed.id});
  EXPECT_NE(test::user_text(chat.requests()[0]).find("o'clock"), std::string::npos);
}

TEST(HoiBank, SlotsAreEnforced) {
  HoiBank bank;
  EXPECT_NO_THROW(bank.add("cup", "I am drinking from the <cup-<ID>-IMG>."));
  EXPECT_THROW(bank.add("cup", "I am drinking."), Error);
  EXPECT_THROW(bank.add("cup", "I move the <cup-<ID>-IMG> to the <cup-<ID>-IMG>."), Error);
  EXPECT_EQ(count_template_slots("the <door-<ID>-IMG> and <cup-<ID>-IMG>"), 2u);
  EXPECT_EQ(bank.template_count(), 1u);
  const HoiBank back = HoiBank::from_json(bank.to_json());
  EXPECT_EQ(back.template_count(), 1u);
}

TEST(HoiBank, BundledBankIsWellFormed) {
  const HoiBank bank = HoiBank::bundled();
  EXPECT_GT(bank.label_count(), 20u);
  for (const auto& [label, sentences] : bank.templates()) {
    for (const auto& t : sentences) EXPECT_EQ(count_template_slots(t), 1u) << label << ": " << t;
  }
  ASSERT_NE(bank.find("door"), nullptr);
}

TEST(Situation, InteractionNames) {
  for (const auto kind : kAllInteractions) EXPECT_EQ(interaction_from_string(to_string(kind)), kind);
  EXPECT_FALSE(interaction_from_string("lying"));
}

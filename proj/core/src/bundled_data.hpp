#pragma once

// Data files compiled into the library (generated from core/data).

#include <string_view>

namespace situgen::data {

std::string_view hoi_bank_json();
std::string_view goal_verbs_json();
std::string_view wild_vocab_json();
std::string_view room_rules_json();
std::string_view affordance_rules_json();
std::string_view colors_json();
std::string_view seed_examples_json();
std::string_view relation_config_json();
std::string_view judge_rubric_text();

}  // namespace situgen::data

#pragma once

#include <array>
#include <cstdint>

namespace bimatch {

// How one arrival slot changes the two queue lengths.  The first symbol is
// the customer queue, the second the server queue: '-' shrinks by one, '+'
// grows by one, '=' unchanged.
enum class TransitionType : std::uint8_t {
  MinusMinus = 0,  // both incoming items match waiting items
  PlusMinusEqual,  // incoming server matches a waiting customer; customer joins
  EqualPlusMinus,  // incoming customer matches a waiting server; server joins
  EqualEqual,      // neither finds a waiting match but they match each other
  PlusPlus,        // no match at all; both join
};

inline constexpr std::array<TransitionType, 5> kTransitionTypes = {
    TransitionType::MinusMinus, TransitionType::PlusMinusEqual,
    TransitionType::EqualPlusMinus, TransitionType::EqualEqual,
    TransitionType::PlusPlus};

inline constexpr const char* label(TransitionType t) {
  switch (t) {
    case TransitionType::MinusMinus: return "minus/minus";
    case TransitionType::PlusMinusEqual: return "pm/equal";
    case TransitionType::EqualPlusMinus: return "equal/pm";
    case TransitionType::EqualEqual: return "equal/equal";
    case TransitionType::PlusPlus: return "plus/plus";
  }
  return "?";
}

}  // namespace bimatch

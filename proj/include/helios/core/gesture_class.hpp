#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "helios/error.hpp"

namespace helios {

/// The ten gesture labels, with their stable 1-based integer encoding.
enum class GestureClass : std::uint8_t {
  Unknown = 1,
  Untracked = 2,
  Pinch = 3,
  DoublePinch = 4,
  PinchReturn = 5,
  SwipeLeft = 6,
  SwipeLeftReturn = 7,
  SwipeRight = 8,
  SwipeRightReturn = 9,
  Rest = 10,
};

inline constexpr int kNumClasses = 10;

inline constexpr std::array<GestureClass, kNumClasses> kAllClasses = {
    GestureClass::Unknown,     GestureClass::Untracked,       GestureClass::Pinch,
    GestureClass::DoublePinch, GestureClass::PinchReturn,     GestureClass::SwipeLeft,
    GestureClass::SwipeLeftReturn, GestureClass::SwipeRight,  GestureClass::SwipeRightReturn,
    GestureClass::Rest,
};

constexpr int encode(GestureClass g) { return static_cast<int>(g); }
/// Zero-based index, for arrays and logits.
constexpr int class_index(GestureClass g) { return static_cast<int>(g) - 1; }

inline GestureClass class_from_index(int index) {
  require(index >= 0 && index < kNumClasses, ErrorCode::kInvalidArgument,
          "class index out of range: " + std::to_string(index));
  return static_cast<GestureClass>(index + 1);
}

inline GestureClass decode_class(int code) {
  require(code >= 1 && code <= kNumClasses, ErrorCode::kInvalidArgument,
          "class encoding out of range: " + std::to_string(code));
  return static_cast<GestureClass>(code);
}

constexpr std::string_view class_name(GestureClass g) {
  switch (g) {
    case GestureClass::Unknown: return "Unknown";
    case GestureClass::Untracked: return "Untracked";
    case GestureClass::Pinch: return "Pinch";
    case GestureClass::DoublePinch: return "DoublePinch";
    case GestureClass::PinchReturn: return "PinchReturn";
    case GestureClass::SwipeLeft: return "SwipeLeft";
    case GestureClass::SwipeLeftReturn: return "SwipeLeftReturn";
    case GestureClass::SwipeRight: return "SwipeRight";
    case GestureClass::SwipeRightReturn: return "SwipeRightReturn";
    case GestureClass::Rest: return "Rest";
  }
  return "?";
}

inline GestureClass class_from_name(std::string_view name) {
  for (GestureClass g : kAllClasses)
    if (class_name(g) == name) return g;
  fail(ErrorCode::kInvalidArgument, "unknown gesture class: " + std::string(name));
}

/// Classes that correspond to a deliberate user command and may be emitted at inference.
constexpr bool is_command(GestureClass g) {
  return g == GestureClass::Pinch || g == GestureClass::DoublePinch ||
         g == GestureClass::SwipeLeft || g == GestureClass::SwipeRight;
}

constexpr bool is_return(GestureClass g) {
  return g == GestureClass::PinchReturn || g == GestureClass::SwipeLeftReturn ||
         g == GestureClass::SwipeRightReturn;
}

}  // namespace helios

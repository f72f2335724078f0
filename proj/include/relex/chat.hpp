#pragma once

#include <string>
#include <vector>

namespace relex {

struct ChatMessage {
  std::string role;  // "system" or "user"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

}  // namespace relex

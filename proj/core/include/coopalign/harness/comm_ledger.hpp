#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace coopalign::harness {

enum class MessageKind { kPose, kBoxes, kFeatures };

std::string_view to_string(MessageKind k);

struct MessageRecord {
  int sender = 0;
  int receiver = 0;
  MessageKind kind = MessageKind::kPose;
  std::size_t bytes = 0;
  int frame = 0;
};

/// Accounting of every inter-agent message. Bytes are the exact serialized
/// payload lengths; messages themselves never leave the process.
class CommLedger {
 public:
  /// Records `payload` as sent; returns its size.
  std::size_t record(int sender, int receiver, MessageKind kind, std::string_view payload, int frame = 0);

  [[nodiscard]] const std::vector<MessageRecord>& records() const noexcept { return records_; }
  [[nodiscard]] std::size_t total_bytes() const;
  [[nodiscard]] std::size_t bytes_of(MessageKind kind) const;
  [[nodiscard]] std::size_t count_of(MessageKind kind) const;

  /// CSV with header sender,receiver,kind,frame,bytes.
  [[nodiscard]] std::string to_csv() const;

 private:
  std::vector<MessageRecord> records_;
};

}  // namespace coopalign::harness

#include "coopalign/harness/comm_ledger.hpp"

#include <sstream>

namespace coopalign::harness {

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::kPose:
      return "pose";
    case MessageKind::kBoxes:
      return "boxes";
    case MessageKind::kFeatures:
      return "features";
  }
  return "unknown";
}

std::size_t CommLedger::record(int sender, int receiver, MessageKind kind, std::string_view payload, int frame) {
  records_.push_back({sender, receiver, kind, payload.size(), frame});
  return payload.size();
}

std::size_t CommLedger::total_bytes() const {
  std::size_t n = 0;
  for (const auto& r : records_) n += r.bytes;
  return n;
}

std::size_t CommLedger::bytes_of(MessageKind kind) const {
  std::size_t n = 0;
  for (const auto& r : records_) n += r.kind == kind ? r.bytes : 0;
  return n;
}

std::size_t CommLedger::count_of(MessageKind kind) const {
  std::size_t n = 0;
  for (const auto& r : records_) n += r.kind == kind ? 1 : 0;
  return n;
}

std::string CommLedger::to_csv() const {
  std::ostringstream os;
  os << "sender,receiver,kind,frame,bytes\n";
  for (const auto& r : records_) {
    os << r.sender << ',' << r.receiver << ',' << to_string(r.kind) << ',' << r.frame << ',' << r.bytes << '\n';
  }
  return os.str();
}

}  // namespace coopalign::harness

#include "nerlp/labels.h"

#include "nerlp/error.h"

namespace nerlp {

IobLabel IobLabel::Parse(std::string_view text) {
  if (text == "O") return Outside();
  if (text.size() > 2 && text[1] == '-' && (text[0] == 'B' || text[0] == 'I')) {
    std::string type(text.substr(2));
    return text[0] == 'B' ? Begin(std::move(type)) : Inside(std::move(type));
  }
  throw DataError("malformed IOB label '" + std::string(text) + "'");
}

std::string IobLabel::str() const {
  switch (prefix) {
    case IobPrefix::kBegin:
      return "B-" + type;
    case IobPrefix::kInside:
      return "I-" + type;
    case IobPrefix::kOutside:
      break;
  }
  return "O";
}

LabelSequence ParseLabels(const std::vector<std::string>& text) {
  LabelSequence out;
  out.reserve(text.size());
  for (const auto& t : text) out.push_back(IobLabel::Parse(t));
  return out;
}

std::vector<std::string> RenderLabels(const LabelSequence& labels) {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(l.str());
  return out;
}

LabelSet::LabelSet(const std::vector<std::string>& entity_types) : types_(entity_types) {
  labels_.push_back(IobLabel::Outside());
  for (const auto& t : types_) {
    if (t.empty() || t.find_first_of(" \t\n") != std::string::npos) {
      throw DataError("invalid entity type name '" + t + "'");
    }
    labels_.push_back(IobLabel::Begin(t));
    labels_.push_back(IobLabel::Inside(t));
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!by_name_.emplace(labels_[i].str(), i).second) {
      throw DataError("duplicate entity type '" + labels_[i].type + "'");
    }
  }
}

std::optional<std::size_t> LabelSet::find(const IobLabel& label) const {
  auto it = by_name_.find(label.str());
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelSet::index(const IobLabel& label) const {
  auto found = find(label);
  if (!found) throw DataError("label '" + label.str() + "' is not in the label inventory");
  return *found;
}

bool LabelSet::contains_type(const std::string& type) const {
  for (const auto& t : types_) {
    if (t == type) return true;
  }
  return false;
}

bool LabelSet::transition_allowed(std::size_t from, std::size_t to) const {
  const IobLabel& next = labels_.at(to);
  if (!next.is_inside()) return true;
  const IobLabel& prev = labels_.at(from);
  return !prev.is_outside() && prev.type == next.type;
}

bool LabelSet::start_allowed(std::size_t to) const { return !labels_.at(to).is_inside(); }

}  // namespace nerlp

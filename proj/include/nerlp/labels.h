#ifndef NERLP_LABELS_H
#define NERLP_LABELS_H

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nerlp {

// The six entity kinds annotated in optimization word problems.
inline const std::vector<std::string>& DefaultEntityTypes() {
  static const std::vector<std::string> kTypes = {
      "VAR", "PARAM", "LIMIT", "CONST_DIR", "OBJ_DIR", "OBJ_NAME"};
  return kTypes;
}

enum class IobPrefix { kOutside, kBegin, kInside };

// One IOB2 label: "O", or a B-/I- prefix attached to an entity type.
struct IobLabel {
  IobPrefix prefix = IobPrefix::kOutside;
  std::string type;

  static IobLabel Outside() { return {}; }
  static IobLabel Begin(std::string t) { return {IobPrefix::kBegin, std::move(t)}; }
  static IobLabel Inside(std::string t) { return {IobPrefix::kInside, std::move(t)}; }

  bool is_outside() const { return prefix == IobPrefix::kOutside; }
  bool is_begin() const { return prefix == IobPrefix::kBegin; }
  bool is_inside() const { return prefix == IobPrefix::kInside; }

  // Throws DataError on anything other than "O", "B-<type>" or "I-<type>".
  static IobLabel Parse(std::string_view text);
  std::string str() const;

  friend bool operator==(const IobLabel&, const IobLabel&) = default;
};

using LabelSequence = std::vector<IobLabel>;

LabelSequence ParseLabels(const std::vector<std::string>& text);
std::vector<std::string> RenderLabels(const LabelSequence& labels);

// Ordered label inventory: O first, then B-T, I-T for each entity type in
// configuration order. Indices into this inventory are the CRF label ids.
class LabelSet {
 public:
  LabelSet() : LabelSet(DefaultEntityTypes()) {}
  explicit LabelSet(const std::vector<std::string>& entity_types);

  std::size_t size() const { return labels_.size(); }
  const IobLabel& label(std::size_t index) const { return labels_.at(index); }
  const std::vector<IobLabel>& labels() const { return labels_; }
  const std::vector<std::string>& entity_types() const { return types_; }

  std::optional<std::size_t> find(const IobLabel& label) const;
  // Throws DataError when the label is not part of the inventory.
  std::size_t index(const IobLabel& label) const;
  bool contains_type(const std::string& type) const;

  // Whether label `to` may directly follow label `from` under IOB2.
  bool transition_allowed(std::size_t from, std::size_t to) const;
  // Whether a sequence may start with the given label.
  bool start_allowed(std::size_t to) const;

 private:
  std::vector<std::string> types_;
  std::vector<IobLabel> labels_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

}  // namespace nerlp

#endif  // NERLP_LABELS_H

#include "chemprot/window.h"

#include <algorithm>

namespace chemprot {

ContextSplit SplitContext(int left_supply, int right_supply, int window) {
  ContextSplit split;
  split.left = std::min(left_supply, window / 2);
  split.right = std::min(right_supply, window - split.left);
  split.left = std::min(left_supply, window - split.right);
  return split;
}

ContextSplit FitContext(int core_len, int left_supply, int right_supply, int window,
                        int max_len) {
  if (core_len > max_len) {
    throw ContractViolation("sequence of " + std::to_string(core_len) +
                            " tokens exceeds encoder max_len " + std::to_string(max_len));
  }
  return SplitContext(left_supply, right_supply, std::min(window, max_len - core_len));
}

ContextSupply GatherContext(const PreparedDocument &doc, int sent_id) {
  ContextSupply out;
  for (int s = 0; s < static_cast<int>(doc.tokens.size()); ++s) {
    if (s == sent_id) continue;
    auto &side = s < sent_id ? out.left : out.right;
    for (const Token &t : doc.tokens[s]) side.push_back(Symbol::Text(t.surface));
  }
  return out;
}

std::vector<Symbol> SentenceSymbols(const PreparedDocument &doc, int sent_id) {
  std::vector<Symbol> out;
  out.reserve(doc.tokens[sent_id].size());
  for (const Token &t : doc.tokens[sent_id]) out.push_back(Symbol::Text(t.surface));
  return out;
}

}  // namespace chemprot

#ifndef CHEMPROT_WINDOW_H_
#define CHEMPROT_WINDOW_H_

#include <vector>

#include "chemprot/alignment.h"
#include "chemprot/encoder.h"

namespace chemprot {

// Number of context tokens taken on each side of a sentence.
struct ContextSplit {
  int left = 0;
  int right = 0;

  bool operator==(const ContextSplit &) const = default;
};

// Splits a budget of `window` tokens as evenly as possible (the odd token
// goes right); whatever one side cannot supply spills to the other.
ContextSplit SplitContext(int left_supply, int right_supply, int window);

// Like SplitContext, but the budget shrinks so that core + context fits in
// max_len. The core (the sentence, plus any markers) is never cut: throws
// ContractViolation when core_len alone exceeds max_len.
ContextSplit FitContext(int core_len, int left_supply, int right_supply, int window,
                        int max_len);

// Document tokens before and after one sentence, in document order.
struct ContextSupply {
  std::vector<Symbol> left;
  std::vector<Symbol> right;
};

ContextSupply GatherContext(const PreparedDocument &doc, int sent_id);

std::vector<Symbol> SentenceSymbols(const PreparedDocument &doc, int sent_id);

}  // namespace chemprot

#endif  // CHEMPROT_WINDOW_H_

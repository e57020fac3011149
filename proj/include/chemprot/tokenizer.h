#ifndef CHEMPROT_TOKENIZER_H_
#define CHEMPROT_TOKENIZER_H_

#include <string>
#include <string_view>
#include <vector>

#include "chemprot/corpus.h"

namespace chemprot {

struct Token {
  int index = 0;
  std::string surface;
  int char_start = 0;  // inclusive, code points
  int char_end = 0;    // exclusive

  bool operator==(const Token &) const = default;
};

// Character classes of the fine-grained tokenizer.
enum class CharClass { kLetter, kDigit, kSpace, kOther };

// kLetter: A-Z, a-z, U+03B1..U+03C9 and U+0391..U+03A9. kDigit: ASCII 0-9.
// kSpace: Unicode whitespace.
CharClass Classify(char32_t c);

// Maximal letter runs and maximal digit runs become single tokens; any other
// non-whitespace character is a token on its own. Offsets are code points.
std::vector<Token> Tokenize(std::string_view text);

// Tokenizes one sentence of a document. Offsets are document-absolute and
// indices restart at zero.
std::vector<Token> TokenizeSentence(const Document &doc, const Sentence &sentence);

}  // namespace chemprot

#endif  // CHEMPROT_TOKENIZER_H_

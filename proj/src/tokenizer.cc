#include "chemprot/tokenizer.h"

namespace chemprot {
namespace {

std::vector<Token> TokenizeChars(std::string_view text, const Utf8Index &index, int first,
                                 int last) {
  std::vector<Token> tokens;
  int i = first;
  while (i < last) {
    const CharClass cls = Classify(index.at(i));
    if (cls == CharClass::kSpace) {
      ++i;
      continue;
    }
    int j = i + 1;
    if (cls == CharClass::kLetter || cls == CharClass::kDigit) {
      while (j < last && Classify(index.at(j)) == cls) ++j;
    }
    tokens.push_back({static_cast<int>(tokens.size()), std::string(index.Slice(text, i, j)),
                      i, j});
    i = j;
  }
  return tokens;
}

}  // namespace

CharClass Classify(char32_t c) {
  if ((c >= U'A' && c <= U'Z') || (c >= U'a' && c <= U'z')) return CharClass::kLetter;
  if ((c >= 0x03B1 && c <= 0x03C9) || (c >= 0x0391 && c <= 0x03A9)) return CharClass::kLetter;
  if (c >= U'0' && c <= U'9') return CharClass::kDigit;
  if (IsUnicodeSpace(c)) return CharClass::kSpace;
  return CharClass::kOther;
}

std::vector<Token> Tokenize(std::string_view text) {
  Utf8Index index(text);
  return TokenizeChars(text, index, 0, index.size());
}

std::vector<Token> TokenizeSentence(const Document &doc, const Sentence &sentence) {
  // Scanning the sentence slice in place keeps letter runs from continuing
  // across the sentence boundary, exactly as tokenizing the slice would.
  return TokenizeChars(doc.text(), doc.index(), sentence.char_start, sentence.char_end);
}

}  // namespace chemprot

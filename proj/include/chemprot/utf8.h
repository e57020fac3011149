#ifndef CHEMPROT_UTF8_H_
#define CHEMPROT_UTF8_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace chemprot {

// Code point view over a UTF-8 string. Character offsets everywhere in the
// library are code point indices, matching how the corpus annotations count.
// Invalid bytes decode to U+FFFD, one code point per byte.
class Utf8Index {
 public:
  Utf8Index() = default;
  explicit Utf8Index(std::string_view text);

  // Number of code points.
  int size() const { return static_cast<int>(chars_.size()); }
  char32_t at(int i) const { return chars_[i]; }
  const std::vector<char32_t> &chars() const { return chars_; }

  // Byte offset of code point i; i == size() gives the total byte length.
  std::size_t byte_offset(int i) const { return bytes_[i]; }

  // Bytes of the code point interval [start, end) of `text`, which must be
  // the string this index was built from.
  std::string_view Slice(std::string_view text, int start, int end) const {
    return text.substr(bytes_[start], bytes_[end] - bytes_[start]);
  }

 private:
  std::vector<char32_t> chars_;
  std::vector<std::size_t> bytes_{0};
};

// Whitespace with the same membership as Python's str.isspace().
bool IsUnicodeSpace(char32_t c);

void AppendUtf8(char32_t c, std::string *out);

}  // namespace chemprot

#endif  // CHEMPROT_UTF8_H_

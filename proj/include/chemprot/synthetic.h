#ifndef CHEMPROT_SYNTHETIC_H_
#define CHEMPROT_SYNTHETIC_H_

#include <cstdint>

#include "chemprot/corpus.h"

namespace chemprot {

struct MicroCorpusOptions {
  int documents = 10;
  int sentences_per_abstract = 4;  // plus the title
  std::uint64_t seed = 7;
};

// Small templated corpus for overfitting checks: every eval relation group, a
// non-eval group, null pairs, several pairs per sentence and nested entities
// ("Na+" and "K+" inside "Na+-K+-2Cl- cotransporter"). Deterministic for a given seed.
Corpus MakeMicroCorpus(const MicroCorpusOptions &options = {});

}  // namespace chemprot

#endif  // CHEMPROT_SYNTHETIC_H_

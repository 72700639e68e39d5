#include "mtie/types.hpp"

namespace mtie {

Task GoldAnnotation::task() const {
  switch (elements.index()) {
    case 0: return Task::RE;
    case 1: return Task::NER;
    default: return Task::EE;
  }
}

}  // namespace mtie

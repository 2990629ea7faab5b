#pragma once

#include <stdexcept>
#include <string>

namespace ystylo {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// corpus
struct MissingColumn : Error { using Error::Error; };
struct MalformedRow : Error { using Error::Error; };
struct EmptyResult : Error { using Error::Error; };
struct ClassTooSmall : Error { using Error::Error; };

// parser
struct UnterminatedString : Error { using Error::Error; };
struct UnterminatedComment : Error { using Error::Error; };
struct SyntaxError : Error { using Error::Error; };
struct MultipleRules : Error { using Error::Error; };
struct UnbalancedBraces : Error { using Error::Error; };

// features / classifiers
struct EmptyTrainingSet : Error { using Error::Error; };
struct SingleClass : Error { using Error::Error; };

// evaluation
struct LengthMismatch : Error { using Error::Error; };
struct UnknownLabel : Error { using Error::Error; };
struct EmptyMatrix : Error { using Error::Error; };
struct DegenerateK : Error { using Error::Error; };

// experiments
struct InsufficientClasses : Error { using Error::Error; };
struct FamilySkipped : Error { using Error::Error; };
struct SchemaMismatch : Error { using Error::Error; };

}  // namespace ystylo

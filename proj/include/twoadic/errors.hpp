#pragma once

#include <stdexcept>
#include <string>

namespace twoadic {

// Base class for all library errors so callers can catch one type.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ring2
struct precondition_failed : error { using error::error; };
struct no_progress : error { using error::error; };

// matgrp
struct not_invertible : error { using error::error; };
struct even_scalar : error { using error::error; };
struct invalid_character : error { using error::error; };

// galimg
struct not_stabilized : error { using error::error; };
struct not_stable : error { using error::error; };
struct kenku_violation : error { using error::error; };

// tables
struct parse_error : error { using error::error; };
struct schema_error : error { using error::error; };
struct unknown_group_name : error { using error::error; };

} // namespace twoadic

#pragma once

#include <cassert>
#include <utility>
#include <variant>

namespace kevo {

/// Value-or-error return type used by operations whose failures are expected
/// outcomes (provider calls, parsing, I/O) rather than programming errors.
template <typename T, typename E>
class Result {
public:
    Result(T value) : storage_(std::in_place_index<0>, std::move(value)) {}
    Result(E error) : storage_(std::in_place_index<1>, std::move(error)) {}

    bool ok() const { return storage_.index() == 0; }
    explicit operator bool() const { return ok(); }

    T& value() {
        assert(ok());
        return std::get<0>(storage_);
    }
    const T& value() const {
        assert(ok());
        return std::get<0>(storage_);
    }
    E& error() {
        assert(!ok());
        return std::get<1>(storage_);
    }
    const E& error() const {
        assert(!ok());
        return std::get<1>(storage_);
    }

    T value_or(T fallback) const { return ok() ? std::get<0>(storage_) : std::move(fallback); }

private:
    std::variant<T, E> storage_;
};

/// Tag for Result<Unit, E> when an operation returns no payload.
struct Unit {};

} // namespace kevo

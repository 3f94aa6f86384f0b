#pragma once

#include <stdexcept>
#include <string>

namespace fastgate {

// Each pipeline stage throws its own subtype so the CLI can map failures to exit codes.
enum class Stage { Config, TrapModel, Schemes, GlobalOpt, OdeDynamics, LocalOpt, ErrorModel, Io };

const char* stage_name(Stage stage);

class Error : public std::runtime_error {
public:
    Error(Stage stage, const std::string& message)
        : std::runtime_error(message), stage_(stage) {}
    Stage stage() const { return stage_; }

private:
    Stage stage_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& m) : Error(Stage::Config, m) {}
};

class TrapModelError : public Error {
public:
    explicit TrapModelError(const std::string& m) : Error(Stage::TrapModel, m) {}
};

class SchemeError : public Error {
public:
    explicit SchemeError(const std::string& m) : Error(Stage::Schemes, m) {}
};

/// Two expanded pulse groups landed on the same repetition-rate slot.
class CollisionError : public SchemeError {
public:
    CollisionError(int first, int second, const std::string& m)
        : SchemeError(m), first_(first), second_(second) {}
    int first_group() const { return first_; }
    int second_group() const { return second_; }

private:
    int first_, second_;
};

class GlobalOptError : public Error {
public:
    explicit GlobalOptError(const std::string& m) : Error(Stage::GlobalOpt, m) {}
};

class OdeError : public Error {
public:
    explicit OdeError(const std::string& m) : Error(Stage::OdeDynamics, m) {}
};

class LocalOptError : public Error {
public:
    explicit LocalOptError(const std::string& m) : Error(Stage::LocalOpt, m) {}
};

class ErrorModelError : public Error {
public:
    explicit ErrorModelError(const std::string& m) : Error(Stage::ErrorModel, m) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& m) : Error(Stage::Io, m) {}
};

}  // namespace fastgate

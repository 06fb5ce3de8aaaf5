#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ldst {

struct SourcePos {
    int line = 0;
    int column = 0;
    long offset = -1;

    bool known() const { return line > 0; }
    std::string to_string() const {
        if (!known()) return "<unknown>";
        return std::to_string(line) + ":" + std::to_string(column);
    }
};

enum class ErrCode {
    None,
    SyntaxError,
    DuplicateDefinition,
    UnknownTypeName,
    NotASessionType,
    NotConvertible,
    UnfoldFailed,
    KindMismatch,
    NotASubtype,
    LinearityViolation,
    BranchEnvMismatch,
    DependencyOnLinear,
    UnboundName,
    FuelExhausted,
    ValueRestriction,
    JoinConflict,
    SimulationMismatch,
};

const char* err_code_name(ErrCode c);

// Single error taxonomy for the whole pipeline. The judgment trace holds the
// names of the rules that were active when the error was raised (innermost
// last).
class Error : public std::runtime_error {
public:
    Error(ErrCode code, std::string message, SourcePos pos = {},
          std::vector<std::string> trace = {})
        : std::runtime_error(message), code_(code), message_(std::move(message)),
          pos_(pos), trace_(std::move(trace)) {}

    ErrCode code() const { return code_; }
    const std::string& message() const { return message_; }
    const SourcePos& pos() const { return pos_; }
    const std::vector<std::string>& trace() const { return trace_; }
    void set_trace(std::vector<std::string> t) { trace_ = std::move(t); }
    void set_pos(SourcePos p) {
        if (!pos_.known()) pos_ = p;
    }

    std::string render() const;

private:
    ErrCode code_;
    std::string message_;
    SourcePos pos_;
    std::vector<std::string> trace_;
};

} // namespace ldst

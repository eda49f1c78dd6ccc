#ifndef GLOCAL_EFFECTIVE_FIELD_HPP
#define GLOCAL_EFFECTIVE_FIELD_HPP

#include <optional>
#include <vector>

#include "glocal/types.hpp"

namespace glocal {

/// Piecewise-constant effective tensor, one optional sample per element.
/// Elements inside the defect region may carry no sample.
class EffectiveField {
public:
    EffectiveField() = default;
    explicit EffectiveField(std::vector<std::optional<SymTensor2>> samples) : samples_(std::move(samples)) {}

    std::size_t size() const { return samples_.size(); }
    bool has(std::size_t element) const { return element < samples_.size() && samples_[element].has_value(); }

    /// Throws DomainError when the element carries no sample.
    const SymTensor2& at(std::size_t element) const
    {
        if (!has(element))
            throw DomainError("effective field has no sample for element " + std::to_string(element));
        return *samples_[element];
    }

    const std::vector<std::optional<SymTensor2>>& samples() const { return samples_; }

private:
    std::vector<std::optional<SymTensor2>> samples_;
};

} // namespace glocal

#endif

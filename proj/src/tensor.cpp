#include "seqcast/tensor.hpp"

#include <cmath>
#include <sstream>

namespace seqcast {

bool Tensor::all_finite() const { return first_nonfinite() == numel(); }

std::size_t Tensor::first_nonfinite() const {
    for (std::size_t i = 0; i < data_.size(); ++i)
        if (!std::isfinite(data_[i])) return i;
    return data_.size();
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ',';
        os << shape_[i];
    }
    os << ']';
    return os.str();
}

} // namespace seqcast

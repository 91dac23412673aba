#pragma once

#include <stdexcept>

namespace tamlab {

// Shape of the antenna-count classifier: one valid-padding convolution over
// the (M/2) x 4 x K feature tensor (height x width x input channels), ReLU, a
// dense hidden layer with ReLU, and a dense softmax output over the N classes.
struct NamArchitecture {
    int conv_kernel_h = 3;
    int conv_kernel_w = 3;
    int conv_channels = 4;
    int hidden_units = 32;

    void validate() const {
        if (conv_kernel_h < 1 || conv_kernel_w < 1 || conv_channels < 1 || hidden_units < 1)
            throw std::invalid_argument("NamArchitecture: all fields must be >= 1");
    }
};

} // namespace tamlab

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace porelab {

struct GridDims {
    int nx = 0, ny = 0, nz = 0;
    std::size_t size() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
    bool operator==(const GridDims&) const = default;
};

inline int wrap(int i, int n) {
    i %= n;
    return i < 0 ? i + n : i;
}

// Scalar lattice field, z fastest. Periodic access via at().
template <class T>
class Array3 {
  public:
    Array3() = default;
    Array3(int nx, int ny, int nz, T fill = T{}) : d_{nx, ny, nz}, v_(d_.size(), fill) {}
    explicit Array3(GridDims d, T fill = T{}) : d_(d), v_(d.size(), fill) {}

    GridDims dims() const { return d_; }
    int nx() const { return d_.nx; }
    int ny() const { return d_.ny; }
    int nz() const { return d_.nz; }
    std::size_t size() const { return v_.size(); }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * d_.ny + j) * d_.nz + k;
    }

    T& operator()(int i, int j, int k) { return v_[index(i, j, k)]; }
    const T& operator()(int i, int j, int k) const { return v_[index(i, j, k)]; }

    T& at(int i, int j, int k) { return v_[index(wrap(i, d_.nx), wrap(j, d_.ny), wrap(k, d_.nz))]; }
    const T& at(int i, int j, int k) const {
        return v_[index(wrap(i, d_.nx), wrap(j, d_.ny), wrap(k, d_.nz))];
    }

    T* data() { return v_.data(); }
    const T* data() const { return v_.data(); }
    std::vector<T>& raw() { return v_; }
    const std::vector<T>& raw() const { return v_; }

    void fill(T value) { v_.assign(v_.size(), value); }

  private:
    GridDims d_;
    std::vector<T> v_;
};

using Field3 = Array3<double>;
using ByteField3 = Array3<std::uint8_t>;

// MAC velocity layout: comp[c](i,j,k) sits on the c-normal face at
// x_c = i*h (and cell-center coordinates in the other two directions).
struct MacField {
    Field3 comp[3];

    MacField() = default;
    explicit MacField(GridDims d) : comp{Field3(d), Field3(d), Field3(d)} {}

    GridDims dims() const { return comp[0].dims(); }
    void fill(double v) {
        for (auto& c : comp) c.fill(v);
    }
};

}  // namespace porelab

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ccsched {

/// Iterative round-robin request/grant/accept matcher over VOQ occupancy.
/// Pointer discipline is the canonical one: grant and accept pointers advance
/// past the chosen port only for grants accepted in the first iteration.
class IslipState {
public:
    explicit IslipState(int n, int iterations_per_slot = 0)
        : n_(n),
          iterations_(iterations_per_slot > 0 ? iterations_per_slot : default_iterations(n)),
          grant_ptr_(n, 0),
          accept_ptr_(n, 0) {
        if (n < 1) throw std::invalid_argument("port count must be positive");
    }

    int ports() const { return n_; }
    int iterations_per_slot() const { return iterations_; }
    const std::vector<int>& grant_pointers() const { return grant_ptr_; }
    const std::vector<int>& accept_pointers() const { return accept_ptr_; }

    static int default_iterations(int n) {
        int it = static_cast<int>(std::ceil(std::log2(static_cast<double>(n))));
        return it < 1 ? 1 : it;
    }

    /// occupancy[i*n+j] != 0 means input i has a head-of-line packet for output j.
    /// Returns out_of_in: for each input the matched output, or -1.
    std::vector<int> match(const std::vector<uint8_t>& occupancy) {
        std::vector<int> out_of_in(n_, -1);
        std::vector<int> in_of_out(n_, -1);
        std::vector<int> grant_to(n_);   // output -> granted input this round
        std::vector<std::vector<int>> grants_at(n_);  // input -> granting outputs
        for (int round = 0; round < iterations_; ++round) {
            bool any = false;
            // Grant: each unmatched output picks the first requesting unmatched
            // input at or after its pointer.
            for (int j = 0; j < n_; ++j) {
                grant_to[j] = -1;
                if (in_of_out[j] != -1) continue;
                for (int k = 0; k < n_; ++k) {
                    int i = (grant_ptr_[j] + k) % n_;
                    if (out_of_in[i] == -1 && occupancy[static_cast<size_t>(i) * n_ + j]) {
                        grant_to[j] = i;
                        break;
                    }
                }
            }
            for (auto& g : grants_at) g.clear();
            for (int j = 0; j < n_; ++j)
                if (grant_to[j] != -1) grants_at[grant_to[j]].push_back(j);
            // Accept: each input with grants picks the first output at or after
            // its pointer; pointers move only on first-iteration accepts.
            for (int i = 0; i < n_; ++i) {
                if (grants_at[i].empty()) continue;
                int chosen = -1;
                for (int k = 0; k < n_ && chosen == -1; ++k) {
                    int j = (accept_ptr_[i] + k) % n_;
                    for (int g : grants_at[i])
                        if (g == j) {
                            chosen = j;
                            break;
                        }
                }
                out_of_in[i] = chosen;
                in_of_out[chosen] = i;
                any = true;
                if (round == 0) {
                    grant_ptr_[chosen] = (i + 1) % n_;
                    accept_ptr_[i] = (chosen + 1) % n_;
                }
            }
            if (!any) break;
        }
        return out_of_in;
    }

private:
    int n_;
    int iterations_;
    std::vector<int> grant_ptr_;
    std::vector<int> accept_ptr_;
};

}  // namespace ccsched

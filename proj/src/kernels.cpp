#include "groupenc/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace groupenc::kernels {

#if GROUPENC_HAVE_AVX2_TU
const KernelTable* avx2_table_impl();
#endif

namespace {

bool cpu_supports_avx2_fma() {
#if GROUPENC_HAVE_AVX2_TU && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* resolve_active() {
    const char* env = std::getenv("GROUPENC_SIMD");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) {
        return &scalar_table();
    }
    const KernelTable* avx2 = avx2_table();
    if (env != nullptr && std::strcmp(env, "avx2") == 0) {
        // Explicit request: fall back silently if unsupported so test
        // suites can set the variable unconditionally.
        return avx2 != nullptr ? avx2 : &scalar_table();
    }
    return avx2 != nullptr ? avx2 : &scalar_table();
}

} // namespace

const KernelTable* avx2_table() {
#if GROUPENC_HAVE_AVX2_TU
    if (cpu_supports_avx2_fma()) {
        return avx2_table_impl();
    }
#endif
    return nullptr;
}

const KernelTable& active_table() {
    static const KernelTable* table = resolve_active();
    return *table;
}

std::string active_level_name() {
    return active_table().name;
}

} // namespace groupenc::kernels

#include "matef/digest.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

namespace matef {

namespace {

std::string evp_hex(std::span<const std::byte> data, const EVP_MD* md) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                                &EVP_MD_CTX_free);
    if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int out_len = 0;
    if (EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), out, &out_len) != 1)
        throw std::runtime_error("EVP digest computation failed");
    static const char* hex = "0123456789abcdef";
    std::string s(out_len * 2, '0');
    for (unsigned int i = 0; i < out_len; ++i) {
        s[2 * i] = hex[out[i] >> 4];
        s[2 * i + 1] = hex[out[i] & 0xf];
    }
    return s;
}

}  // namespace

std::string md5_hex(std::span<const std::byte> data) { return evp_hex(data, EVP_md5()); }

std::string sha256_hex(std::span<const std::byte> data) { return evp_hex(data, EVP_sha256()); }

}  // namespace matef

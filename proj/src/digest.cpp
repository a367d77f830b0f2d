#include "she/digest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace she {

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int md_len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), md, &md_len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256_hex: EVP_Digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * md_len);
    for (unsigned int i = 0; i < md_len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string canonical_json_digest(const nlohmann::json& j) {
    // nlohmann::json objects iterate in sorted key order, so dump() is canonical.
    return sha256_hex(j.dump());
}

}  // namespace she

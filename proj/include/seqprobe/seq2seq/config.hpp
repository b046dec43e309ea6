#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace seqprobe::seq2seq {

using TokenId = std::uint32_t;

/// Reserved ids shared by every vocabulary.
inline constexpr TokenId kUnkId = 0;
inline constexpr TokenId kEosId = 1;
inline constexpr TokenId kBosId = 2;
inline constexpr std::size_t kReservedTokens = 3;

enum class Attention { None, Dot, General, Concat, Tensor };

std::string_view to_string(Attention a);
Attention parse_attention(std::string_view name);

struct ModelConfig {
  std::size_t src_vocab_size = 0;
  std::size_t tgt_vocab_size = 0;
  std::size_t d_emb = 0;
  /// Decoder hidden size. Each encoder direction uses d_h / 2.
  std::size_t d_h = 0;
  std::size_t enc_layers = 1;
  std::size_t dec_layers = 1;
  Attention attention = Attention::General;
  /// Slice count of the bilinear tensor in Tensor attention.
  std::size_t tensor_k = 8;
  std::size_t max_decode_len = 20;

  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;
  std::size_t encoder_hidden() const noexcept { return d_h / 2; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace seqprobe::seq2seq

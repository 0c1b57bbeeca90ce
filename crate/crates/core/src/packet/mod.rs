//! Bit-exact classical packet formats for qUDP and qTCP.
//!
//! Everything is big-endian on the wire. The four packet kinds are told
//! apart by a one-byte indicator that follows the classical header:
//! 0x51 repeater-qUDP, 0x52 repeater-qTCP, 0x53 plain-qUDP, 0x54
//! plain-qTCP. Repeater-model packets carry Pauli-correction data and the
//! pool positions of the EPR halves they consumed; plain-model packets are
//! escorts whose qubits travel alongside as simulation objects.
//!
//! Checksums are RFC-1071 one's-complement sums over a two-byte protocol
//! pseudo-header (the classical IP protocol number, 17 for UDP and 6 for
//! TCP) followed by the packet with its checksum field zeroed. The
//! pseudo-header is what lets [`parse`] tell the two header layouts apart
//! unambiguously.

pub mod checksum;


use thiserror::Error;

use crate::primitives::CorrectionWord;
use crate::qsim::PauliOp;

pub use checksum::{compute_checksum, ones_complement_sum, verifies};

pub const INDICATOR_REPEATER_QUDP: u8 = 0x51;
pub const INDICATOR_REPEATER_QTCP: u8 = 0x52;
pub const INDICATOR_PLAIN_QUDP: u8 = 0x53;
pub const INDICATOR_PLAIN_QTCP: u8 = 0x54;

pub const UDP_HEADER_LEN: usize = 8;
pub const TCP_HEADER_LEN: usize = 18;

/// IP protocol numbers, mixed into the checksum as a pseudo-header word.
/// This is what makes the two header layouts mutually exclusive at parse
/// time: a buffer that sums correctly under one protocol number can never
/// sum correctly under the other.
pub const PROTO_UDP: u8 = 17;
pub const PROTO_TCP: u8 = 6;

fn packet_checksum(proto: u8, zeroed: &[u8]) -> u16 {
    let mut buf = Vec::with_capacity(zeroed.len() + 2);
    buf.push(proto);
    buf.push(0);
    buf.extend_from_slice(zeroed);
    compute_checksum(&buf)
}

fn packet_verifies(proto: u8, bytes: &[u8]) -> bool {
    let mut buf = Vec::with_capacity(bytes.len() + 2);
    buf.push(proto);
    buf.push(0);
    buf.extend_from_slice(bytes);
    verifies(&buf)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PacketError {
    #[error("buffer truncated: needed {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("checksum mismatch")]
    BadChecksum,
    #[error("unknown indicator byte {0:#04x}")]
    UnknownIndicator(u8),
    #[error("header length field {field} does not match buffer length {actual}")]
    LengthMismatch { field: usize, actual: usize },
    #[error("SYN and FIN must not be set together")]
    BadFlags,
    #[error("unknown share stage {0}")]
    BadStage(u8),
    #[error("retransmission round {0} overflows 30 bits")]
    RoundOverflow(u32),
    #[error("reserved header byte is nonzero")]
    ReservedNonzero,
    #[error("trailing bytes after payload")]
    TrailingBytes,
    #[error("packet would exceed the 16-bit length field")]
    TooLarge,
    #[error("positions and corrections must have equal length")]
    CorrectionCountMismatch,
}

pub type Result<T> = std::result::Result<T, PacketError>;

/// Which network model a packet belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetModel {
    Repeater,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassicalUdpHeader {
    pub src_port: u16,
    pub dst_port: u16,
    /// Total packet length in bytes, header included.
    pub length: u16,
    pub checksum: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TcpFlags(pub u8);

impl TcpFlags {
    pub const SYN: TcpFlags = TcpFlags(0b0001);
    pub const ACK: TcpFlags = TcpFlags(0b0010);
    pub const FIN: TcpFlags = TcpFlags(0b0100);
    pub const RST: TcpFlags = TcpFlags(0b1000);

    pub fn contains(&self, other: TcpFlags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn union(&self, other: TcpFlags) -> TcpFlags {
        TcpFlags(self.0 | other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassicalTcpHeader {
    pub src_port: u16,
    pub dst_port: u16,
    pub seq: u32,
    pub ack: u32,
    pub flags: TcpFlags,
    pub window: u16,
    pub checksum: u16,
}

/// Receiver-side transfer status, the low two bits of a pseudo-ack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReceiverStatus {
    /// Waiting for some A₂ (previous one missing or invalid).
    WaitingA2 = 0,
    /// A₂ received, waiting for the matching A₃.
    HaveA2AwaitingA3 = 1,
    /// A₂ received but the matching A₃ was invalid.
    A3Invalid = 2,
    /// Both shares of the round validly received.
    BothValid = 3,
}

impl ReceiverStatus {
    pub fn from_bits(bits: u8) -> ReceiverStatus {
        match bits & 0b11 {
            0 => ReceiverStatus::WaitingA2,
            1 => ReceiverStatus::HaveA2AwaitingA3,
            2 => ReceiverStatus::A3Invalid,
            _ => ReceiverStatus::BothValid,
        }
    }
}

/// Sender-side quantum payload tag on data-bearing qTCP packets; reuses the
/// two-bit pseudo-ack status slot in the sender→receiver direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SenderStage {
    /// Handshake leg payload (SYN/SYN-ACK/ACK quantum information).
    Handshake = 0,
    /// Share A₂ of the current round.
    ShareA2 = 1,
    /// Share A₃ of the current round.
    ShareA3 = 2,
    /// Block abandoned; receiver releases everything for this block.
    BlockAbort = 3,
}

impl SenderStage {
    pub fn from_bits(bits: u8) -> SenderStage {
        match bits & 0b11 {
            0 => SenderStage::Handshake,
            1 => SenderStage::ShareA2,
            2 => SenderStage::ShareA3,
            _ => SenderStage::BlockAbort,
        }
    }
}

/// Pack a receiver status and 30-bit round index into a pseudo-ack value.
pub fn encode_pseudo_ack(status: ReceiverStatus, round: u32) -> Result<u32> {
    if round >= 1 << 30 {
        return Err(PacketError::RoundOverflow(round));
    }
    Ok(round << 2 | status as u32)
}

pub fn decode_pseudo_ack(value: u32) -> (ReceiverStatus, u32) {
    (ReceiverStatus::from_bits(value as u8), value >> 2)
}

/// Sender-direction variant of the pseudo-ack encoding.
pub fn encode_stage_ack(stage: SenderStage, round: u32) -> Result<u32> {
    if round >= 1 << 30 {
        return Err(PacketError::RoundOverflow(round));
    }
    Ok(round << 2 | stage as u32)
}

pub fn decode_stage_ack(value: u32) -> (SenderStage, u32) {
    (SenderStage::from_bits(value as u8), value >> 2)
}

/// Teleportation bookkeeping carried by repeater-model packets: which pool
/// positions were consumed and the Pauli corrections for each teleported
/// qubit, 2 bits per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RepeaterQuantumData {
    pub group_index: u16,
    pub group_count: u16,
    pub positions: Vec<u32>,
    pub corrections: CorrectionWord,
}

impl RepeaterQuantumData {
    pub fn new(
        group_index: u16,
        group_count: u16,
        positions: Vec<u32>,
        corrections: CorrectionWord,
    ) -> Result<Self> {
        if positions.len() != corrections.len() {
            return Err(PacketError::CorrectionCountMismatch);
        }
        Ok(RepeaterQuantumData { group_index, group_count, positions, corrections })
    }

    pub fn qubit_count(&self) -> usize {
        self.positions.len()
    }

    fn wire_len(&self) -> usize {
        6 + 4 * self.positions.len() + packed_len(self.positions.len())
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.group_index.to_be_bytes());
        out.extend_from_slice(&self.group_count.to_be_bytes());
        out.extend_from_slice(&(self.positions.len() as u16).to_be_bytes());
        for p in &self.positions {
            out.extend_from_slice(&p.to_be_bytes());
        }
        out.extend_from_slice(&pack_corrections(&self.corrections));
    }

    fn read(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < 6 {
            return Err(PacketError::Truncated { needed: 6, got: bytes.len() });
        }
        let group_index = u16::from_be_bytes([bytes[0], bytes[1]]);
        let group_count = u16::from_be_bytes([bytes[2], bytes[3]]);
        let qubit_count = u16::from_be_bytes([bytes[4], bytes[5]]) as usize;
        let need = 6 + 4 * qubit_count + packed_len(qubit_count);
        if bytes.len() < need {
            return Err(PacketError::Truncated { needed: need, got: bytes.len() });
        }
        let mut positions = Vec::with_capacity(qubit_count);
        for i in 0..qubit_count {
            let off = 6 + 4 * i;
            positions.push(u32::from_be_bytes([
                bytes[off],
                bytes[off + 1],
                bytes[off + 2],
                bytes[off + 3],
            ]));
        }
        let corr_off = 6 + 4 * qubit_count;
        let corrections =
            unpack_corrections(qubit_count, &bytes[corr_off..corr_off + packed_len(qubit_count)]);
        Ok((RepeaterQuantumData { group_index, group_count, positions, corrections }, need))
    }
}

fn packed_len(qubit_count: usize) -> usize {
    (2 * qubit_count).div_ceil(8)
}

/// 2 bits per qubit, MSB first: qubit i occupies bits [6−2(i mod 4)] of
/// byte i/4, high bit X then Z.
pub fn pack_corrections(word: &CorrectionWord) -> Vec<u8> {
    let mut out = vec![0u8; packed_len(word.len())];
    for (i, op) in word.iter().enumerate() {
        out[i / 4] |= op.bits() << (6 - 2 * (i % 4));
    }
    out
}

pub fn unpack_corrections(count: usize, bytes: &[u8]) -> CorrectionWord {
    let mut word = CorrectionWord::identity(0);
    for i in 0..count {
        let bits = bytes[i / 4] >> (6 - 2 * (i % 4)) & 0b11;
        word.push(PauliOp::from_bits(bits));
    }
    word
}

/// qUDP packet: classical UDP header, indicator, then the model-specific
/// payload. Plain-model payloads carry only reassembly counters since the
/// qubits travel alongside the packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QUdpPacket {
    pub header: ClassicalUdpHeader,
    pub model: NetModel,
    pub payload: QUdpPayload,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QUdpPayload {
    Repeater(RepeaterQuantumData),
    Plain { group_index: u16, group_count: u16, qubit_count: u16 },
}

impl QUdpPacket {
    pub fn new_repeater(src_port: u16, dst_port: u16, data: RepeaterQuantumData) -> Result<Self> {
        Self::build(src_port, dst_port, NetModel::Repeater, QUdpPayload::Repeater(data))
    }

    pub fn new_plain(
        src_port: u16,
        dst_port: u16,
        group_index: u16,
        group_count: u16,
        qubit_count: u16,
    ) -> Result<Self> {
        Self::build(
            src_port,
            dst_port,
            NetModel::Plain,
            QUdpPayload::Plain { group_index, group_count, qubit_count },
        )
    }

    fn build(src_port: u16, dst_port: u16, model: NetModel, payload: QUdpPayload) -> Result<Self> {
        let payload_len = match &payload {
            QUdpPayload::Repeater(d) => d.wire_len(),
            QUdpPayload::Plain { .. } => 6,
        };
        let total = UDP_HEADER_LEN + 1 + payload_len;
        if total > u16::MAX as usize {
            return Err(PacketError::TooLarge);
        }
        let mut packet = QUdpPacket {
            header: ClassicalUdpHeader { src_port, dst_port, length: total as u16, checksum: 0 },
            model,
            payload,
        };
        let bytes = packet.serialize_with_checksum(0);
        packet.header.checksum = packet_checksum(PROTO_UDP, &bytes);
        Ok(packet)
    }

    pub fn indicator(&self) -> u8 {
        match self.model {
            NetModel::Repeater => INDICATOR_REPEATER_QUDP,
            NetModel::Plain => INDICATOR_PLAIN_QUDP,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.serialize_with_checksum(self.header.checksum)
    }

    fn serialize_with_checksum(&self, checksum: u16) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.header.length as usize);
        out.extend_from_slice(&self.header.src_port.to_be_bytes());
        out.extend_from_slice(&self.header.dst_port.to_be_bytes());
        out.extend_from_slice(&self.header.length.to_be_bytes());
        out.extend_from_slice(&checksum.to_be_bytes());
        out.push(self.indicator());
        match &self.payload {
            QUdpPayload::Repeater(d) => d.write(&mut out),
            QUdpPayload::Plain { group_index, group_count, qubit_count } => {
                out.extend_from_slice(&group_index.to_be_bytes());
                out.extend_from_slice(&group_count.to_be_bytes());
                out.extend_from_slice(&qubit_count.to_be_bytes());
            }
        }
        out
    }

    fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < UDP_HEADER_LEN + 1 {
            return Err(PacketError::Truncated { needed: UDP_HEADER_LEN + 1, got: bytes.len() });
        }
        let header = ClassicalUdpHeader {
            src_port: u16::from_be_bytes([bytes[0], bytes[1]]),
            dst_port: u16::from_be_bytes([bytes[2], bytes[3]]),
            length: u16::from_be_bytes([bytes[4], bytes[5]]),
            checksum: u16::from_be_bytes([bytes[6], bytes[7]]),
        };
        if header.length as usize != bytes.len() {
            return Err(PacketError::LengthMismatch {
                field: header.length as usize,
                actual: bytes.len(),
            });
        }
        if !packet_verifies(PROTO_UDP, bytes) {
            return Err(PacketError::BadChecksum);
        }
        let model = match bytes[8] {
            INDICATOR_REPEATER_QUDP => NetModel::Repeater,
            INDICATOR_PLAIN_QUDP => NetModel::Plain,
            other => return Err(PacketError::UnknownIndicator(other)),
        };
        let rest = &bytes[9..];
        let payload = match model {
            NetModel::Repeater => {
                let (data, used) = RepeaterQuantumData::read(rest)?;
                if used != rest.len() {
                    return Err(PacketError::TrailingBytes);
                }
                QUdpPayload::Repeater(data)
            }
            NetModel::Plain => {
                if rest.len() != 6 {
                    return Err(if rest.len() < 6 {
                        PacketError::Truncated { needed: 6, got: rest.len() }
                    } else {
                        PacketError::TrailingBytes
                    });
                }
                QUdpPayload::Plain {
                    group_index: u16::from_be_bytes([rest[0], rest[1]]),
                    group_count: u16::from_be_bytes([rest[2], rest[3]]),
                    qubit_count: u16::from_be_bytes([rest[4], rest[5]]),
                }
            }
        };
        Ok(QUdpPacket { header, model, payload })
    }
}

/// qTCP packet: classical TCP header, indicator, pseudo acknowledgement
/// number, pseudo window, then the model-specific payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QTcpPacket {
    pub header: ClassicalTcpHeader,
    pub model: NetModel,
    /// Low 2 bits: receiver status (acks) or sender stage (data packets);
    /// upper 30 bits: retransmission round index.
    pub pseudo_ack: u32,
    pub pseudo_window: u16,
    pub payload: QTcpPayload,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QTcpPayload {
    /// Control-only packet, or a plain-model packet whose qubits travel
    /// alongside.
    None,
    /// Repeater-model quantum payload with a share-stage tag.
    Quantum { stage: SenderStage, data: RepeaterQuantumData },
}

impl QTcpPacket {
    pub fn new(
        header: ClassicalTcpHeader,
        model: NetModel,
        pseudo_ack: u32,
        pseudo_window: u16,
        payload: QTcpPayload,
    ) -> Result<Self> {
        if header.flags.contains(TcpFlags::SYN) && header.flags.contains(TcpFlags::FIN) {
            return Err(PacketError::BadFlags);
        }
        if matches!(payload, QTcpPayload::Quantum { .. }) && model == NetModel::Plain {
            // plain-model packets never serialize quantum data
            return Err(PacketError::TrailingBytes);
        }
        let mut packet = QTcpPacket { header, model, pseudo_ack, pseudo_window, payload };
        packet.header.checksum = 0;
        let bytes = packet.serialize_with_checksum(0);
        packet.header.checksum = packet_checksum(PROTO_TCP, &bytes);
        Ok(packet)
    }

    pub fn indicator(&self) -> u8 {
        match self.model {
            NetModel::Repeater => INDICATOR_REPEATER_QTCP,
            NetModel::Plain => INDICATOR_PLAIN_QTCP,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.serialize_with_checksum(self.header.checksum)
    }

    fn serialize_with_checksum(&self, checksum: u16) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.header.src_port.to_be_bytes());
        out.extend_from_slice(&self.header.dst_port.to_be_bytes());
        out.extend_from_slice(&self.header.seq.to_be_bytes());
        out.extend_from_slice(&self.header.ack.to_be_bytes());
        out.push(0); // reserved, keeps the checksum word-aligned
        out.push(self.header.flags.0);
        out.extend_from_slice(&self.header.window.to_be_bytes());
        out.extend_from_slice(&checksum.to_be_bytes());
        out.push(self.indicator());
        out.extend_from_slice(&self.pseudo_ack.to_be_bytes());
        out.extend_from_slice(&self.pseudo_window.to_be_bytes());
        if let QTcpPayload::Quantum { stage, data } = &self.payload {
            out.push(*stage as u8);
            data.write(&mut out);
        }
        out
    }

    fn parse(bytes: &[u8]) -> Result<Self> {
        let fixed = TCP_HEADER_LEN + 1 + 4 + 2;
        if bytes.len() < fixed {
            return Err(PacketError::Truncated { needed: fixed, got: bytes.len() });
        }
        if !packet_verifies(PROTO_TCP, bytes) {
            return Err(PacketError::BadChecksum);
        }
        if bytes[12] != 0 {
            return Err(PacketError::ReservedNonzero);
        }
        let header = ClassicalTcpHeader {
            src_port: u16::from_be_bytes([bytes[0], bytes[1]]),
            dst_port: u16::from_be_bytes([bytes[2], bytes[3]]),
            seq: u32::from_be_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]),
            ack: u32::from_be_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]),
            flags: TcpFlags(bytes[13]),
            window: u16::from_be_bytes([bytes[14], bytes[15]]),
            checksum: u16::from_be_bytes([bytes[16], bytes[17]]),
        };
        if header.flags.contains(TcpFlags::SYN) && header.flags.contains(TcpFlags::FIN) {
            return Err(PacketError::BadFlags);
        }
        let model = match bytes[TCP_HEADER_LEN] {
            INDICATOR_REPEATER_QTCP => NetModel::Repeater,
            INDICATOR_PLAIN_QTCP => NetModel::Plain,
            other => return Err(PacketError::UnknownIndicator(other)),
        };
        let pseudo_ack = u32::from_be_bytes([bytes[19], bytes[20], bytes[21], bytes[22]]);
        let pseudo_window = u16::from_be_bytes([bytes[23], bytes[24]]);
        let rest = &bytes[fixed..];
        let payload = if rest.is_empty() {
            QTcpPayload::None
        } else {
            if model == NetModel::Plain {
                return Err(PacketError::TrailingBytes);
            }
            if rest[0] > SenderStage::BlockAbort as u8 {
                return Err(PacketError::BadStage(rest[0]));
            }
            let stage = SenderStage::from_bits(rest[0]);
            let (data, used) = RepeaterQuantumData::read(&rest[1..])?;
            if used + 1 != rest.len() {
                return Err(PacketError::TrailingBytes);
            }
            QTcpPayload::Quantum { stage, data }
        };
        Ok(QTcpPacket { header, model, pseudo_ack, pseudo_window, payload })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Packet {
    QUdp(QUdpPacket),
    QTcp(QTcpPacket),
}

impl Packet {
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            Packet::QUdp(p) => p.to_bytes(),
            Packet::QTcp(p) => p.to_bytes(),
        }
    }
}

/// Parse a received buffer. The UDP interpretation is tried first; it is
/// accepted only if the indicator, the length field, the checksum and the
/// exact payload extent all agree, otherwise the TCP layout is attempted.
pub fn parse(bytes: &[u8]) -> Result<Packet> {
    match QUdpPacket::parse(bytes) {
        Ok(p) => Ok(Packet::QUdp(p)),
        Err(udp_err) => match QTcpPacket::parse(bytes) {
            Ok(p) => Ok(Packet::QTcp(p)),
            Err(tcp_err) => {
                // the UDP error wins unless the buffer failed UDP's basic
                // framing, in which case the TCP diagnosis is the useful one
                if matches!(
                    udp_err,
                    PacketError::LengthMismatch { .. } | PacketError::Truncated { .. }
                ) {
                    Err(tcp_err)
                } else {
                    Err(udp_err)
                }
            }
        },
    }
}
